#ifndef PQSCMS_P256_H
#define PQSCMS_P256_H

#include <stdint.h>

int p256_scalar_mult(const uint8_t k[32], const uint8_t px[32], const uint8_t py[32],
                     uint8_t out_x[32], uint8_t out_y[32]);
int p256_scalar_mult_base(const uint8_t k[32], uint8_t out_x[32], uint8_t out_y[32]);
int p256_point_add(const uint8_t ax[32], const uint8_t ay[32], const uint8_t bx[32],
                   const uint8_t by[32], uint8_t out_x[32], uint8_t out_y[32]);
int p256_mul_add_base(const uint8_t k[32], const uint8_t ax[32], const uint8_t ay[32],
                      uint8_t out_x[32], uint8_t out_y[32]);

#endif

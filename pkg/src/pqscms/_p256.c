/* P-256 point arithmetic on 4x64-bit Montgomery limbs.
 *
 * Not constant time. Inputs and outputs are 32-byte big-endian integers;
 * the identity is reported through the return value (0 = identity).
 */
#include <stdint.h>
#include <string.h>
#include "_p256.h"

typedef unsigned __int128 u128;
typedef uint64_t fe[4];

static const fe P = {0xffffffffffffffffULL, 0x00000000ffffffffULL,
                     0x0000000000000000ULL, 0xffffffff00000001ULL};
static const fe R2 = {0x0000000000000003ULL, 0xfffffffbffffffffULL,
                      0xfffffffffffffffeULL, 0x00000004fffffffdULL};
static const fe ONE_MONT = {0x0000000000000001ULL, 0xffffffff00000000ULL,
                            0xffffffffffffffffULL, 0x00000000fffffffeULL};

static const uint8_t GX[32] = {
    0x6b, 0x17, 0xd1, 0xf2, 0xe1, 0x2c, 0x42, 0x47, 0xf8, 0xbc, 0xe6,
    0xe5, 0x63, 0xa4, 0x40, 0xf2, 0x77, 0x03, 0x7d, 0x81, 0x2d, 0xeb,
    0x33, 0xa0, 0xf4, 0xa1, 0x39, 0x45, 0xd8, 0x98, 0xc2, 0x96};
static const uint8_t GY[32] = {
    0x4f, 0xe3, 0x42, 0xe2, 0xfe, 0x1a, 0x7f, 0x9b, 0x8e, 0xe7, 0xeb,
    0x4a, 0x7c, 0x0f, 0x9e, 0x16, 0x2b, 0xce, 0x33, 0x57, 0x6b, 0x31,
    0x5e, 0xce, 0xcb, 0xb6, 0x40, 0x68, 0x37, 0xbf, 0x51, 0xf5};

typedef struct {
    fe x, y, z; /* Jacobian; z == 0 is the identity */
} jpoint;

static int fe_is_zero(const fe a) { return (a[0] | a[1] | a[2] | a[3]) == 0; }

static int fe_eq(const fe a, const fe b) {
    return ((a[0] ^ b[0]) | (a[1] ^ b[1]) | (a[2] ^ b[2]) | (a[3] ^ b[3])) == 0;
}

/* r = a - b, returns borrow */
static uint64_t sub4(fe r, const fe a, const fe b) {
    u128 t;
    uint64_t borrow = 0;
    for (int i = 0; i < 4; i++) {
        t = (u128)a[i] - b[i] - borrow;
        r[i] = (uint64_t)t;
        borrow = (uint64_t)(t >> 64) & 1;
    }
    return borrow;
}

static uint64_t add4(fe r, const fe a, const fe b) {
    u128 t = 0;
    for (int i = 0; i < 4; i++) {
        t += (u128)a[i] + b[i];
        r[i] = (uint64_t)t;
        t >>= 64;
    }
    return (uint64_t)t;
}

static void fe_add(fe r, const fe a, const fe b) {
    fe s, t;
    uint64_t carry = add4(s, a, b);
    uint64_t borrow = sub4(t, s, P);
    if (carry || !borrow)
        memcpy(r, t, sizeof(fe));
    else
        memcpy(r, s, sizeof(fe));
}

static void fe_sub(fe r, const fe a, const fe b) {
    fe s;
    if (sub4(s, a, b))
        add4(s, s, P);
    memcpy(r, s, sizeof(fe));
}

/* CIOS Montgomery multiplication; -p^-1 mod 2^64 == 1 for P-256 */
static void fe_mul(fe r, const fe a, const fe b) {
    uint64_t t[6] = {0, 0, 0, 0, 0, 0};
    for (int i = 0; i < 4; i++) {
        u128 c = 0;
        for (int j = 0; j < 4; j++) {
            c += (u128)a[j] * b[i] + t[j];
            t[j] = (uint64_t)c;
            c >>= 64;
        }
        c += t[4];
        t[4] = (uint64_t)c;
        t[5] = (uint64_t)(c >> 64);

        uint64_t m = t[0];
        c = (u128)m * P[0] + t[0];
        c >>= 64;
        for (int j = 1; j < 4; j++) {
            c += (u128)m * P[j] + t[j];
            t[j - 1] = (uint64_t)c;
            c >>= 64;
        }
        c += t[4];
        t[3] = (uint64_t)c;
        t[4] = t[5] + (uint64_t)(c >> 64);
    }
    fe s;
    uint64_t borrow = sub4(s, t, P);
    if (t[4] || !borrow)
        memcpy(r, s, sizeof(fe));
    else
        memcpy(r, t, sizeof(fe));
}

static void fe_sqr(fe r, const fe a) { fe_mul(r, a, a); }

static void fe_from_bytes(fe r, const uint8_t in[32]) {
    for (int i = 0; i < 4; i++) {
        uint64_t w = 0;
        for (int j = 0; j < 8; j++)
            w = (w << 8) | in[(3 - i) * 8 + j];
        r[i] = w;
    }
}

static void fe_to_bytes(uint8_t out[32], const fe a) {
    for (int i = 0; i < 4; i++) {
        uint64_t w = a[i];
        for (int j = 7; j >= 0; j--) {
            out[(3 - i) * 8 + j] = (uint8_t)w;
            w >>= 8;
        }
    }
}

static void fe_to_mont(fe r, const fe a) { fe_mul(r, a, R2); }

static void fe_from_mont(fe r, const fe a) {
    static const fe one = {1, 0, 0, 0};
    fe_mul(r, a, one);
}

/* a^(p-2) */
static void fe_inv(fe r, const fe a) {
    fe e, acc;
    sub4(e, P, (const uint64_t[4]){2, 0, 0, 0});
    memcpy(acc, ONE_MONT, sizeof(fe));
    for (int i = 255; i >= 0; i--) {
        fe_sqr(acc, acc);
        if ((e[i / 64] >> (i % 64)) & 1)
            fe_mul(acc, acc, a);
    }
    memcpy(r, acc, sizeof(fe));
}

static void jp_double(jpoint *r, const jpoint *p) {
    if (fe_is_zero(p->z) || fe_is_zero(p->y)) {
        memset(r, 0, sizeof(*r));
        return;
    }
    fe delta, gamma, beta, alpha, t1, t2, x3, y3, z3;
    fe_sqr(delta, p->z);
    fe_sqr(gamma, p->y);
    fe_mul(beta, p->x, gamma);
    fe_sub(t1, p->x, delta);
    fe_add(t2, p->x, delta);
    fe_mul(alpha, t1, t2);
    fe_add(t1, alpha, alpha);
    fe_add(alpha, t1, alpha); /* alpha = 3(x-d)(x+d) */

    fe_sqr(x3, alpha);
    fe_add(t1, beta, beta);   /* 2b */
    fe_add(t1, t1, t1);       /* 4b */
    fe_add(t2, t1, t1);       /* 8b */
    fe_sub(x3, x3, t2);

    fe_add(z3, p->y, p->z);
    fe_sqr(z3, z3);
    fe_sub(z3, z3, gamma);
    fe_sub(z3, z3, delta);

    fe_sub(t1, t1, x3);       /* 4b - x3 */
    fe_mul(y3, alpha, t1);
    fe_sqr(t2, gamma);
    fe_add(t2, t2, t2);
    fe_add(t2, t2, t2);
    fe_add(t2, t2, t2);       /* 8 gamma^2 */
    fe_sub(y3, y3, t2);

    memcpy(r->x, x3, sizeof(fe));
    memcpy(r->y, y3, sizeof(fe));
    memcpy(r->z, z3, sizeof(fe));
}

static void jp_add(jpoint *r, const jpoint *p, const jpoint *q) {
    if (fe_is_zero(p->z)) {
        *r = *q;
        return;
    }
    if (fe_is_zero(q->z)) {
        *r = *p;
        return;
    }
    fe z1z1, z2z2, u1, u2, s1, s2, h, i, j, rr, v, t, x3, y3, z3;
    fe_sqr(z1z1, p->z);
    fe_sqr(z2z2, q->z);
    fe_mul(u1, p->x, z2z2);
    fe_mul(u2, q->x, z1z1);
    fe_mul(s1, p->y, q->z);
    fe_mul(s1, s1, z2z2);
    fe_mul(s2, q->y, p->z);
    fe_mul(s2, s2, z1z1);

    if (fe_eq(u1, u2)) {
        if (fe_eq(s1, s2))
            jp_double(r, p);
        else
            memset(r, 0, sizeof(*r));
        return;
    }

    fe_sub(h, u2, u1);
    fe_add(i, h, h);
    fe_sqr(i, i);
    fe_mul(j, h, i);
    fe_sub(rr, s2, s1);
    fe_add(rr, rr, rr);
    fe_mul(v, u1, i);

    fe_sqr(x3, rr);
    fe_sub(x3, x3, j);
    fe_sub(x3, x3, v);
    fe_sub(x3, x3, v);

    fe_sub(t, v, x3);
    fe_mul(y3, rr, t);
    fe_mul(t, s1, j);
    fe_add(t, t, t);
    fe_sub(y3, y3, t);

    fe_add(z3, p->z, q->z);
    fe_sqr(z3, z3);
    fe_sub(z3, z3, z1z1);
    fe_sub(z3, z3, z2z2);
    fe_mul(z3, z3, h);

    memcpy(r->x, x3, sizeof(fe));
    memcpy(r->y, y3, sizeof(fe));
    memcpy(r->z, z3, sizeof(fe));
}

static void jp_from_affine(jpoint *r, const uint8_t x[32], const uint8_t y[32]) {
    fe t;
    fe_from_bytes(t, x);
    fe_to_mont(r->x, t);
    fe_from_bytes(t, y);
    fe_to_mont(r->y, t);
    memcpy(r->z, ONE_MONT, sizeof(fe));
}

static int jp_to_affine(uint8_t x[32], uint8_t y[32], const jpoint *p) {
    if (fe_is_zero(p->z))
        return 0;
    fe zi, zi2, zi3, t;
    fe_inv(zi, p->z);
    fe_sqr(zi2, zi);
    fe_mul(zi3, zi2, zi);
    fe_mul(t, p->x, zi2);
    fe_from_mont(t, t);
    fe_to_bytes(x, t);
    fe_mul(t, p->y, zi3);
    fe_from_mont(t, t);
    fe_to_bytes(y, t);
    return 1;
}

/* 4-bit fixed window, most significant nibble first */
static void jp_mul(jpoint *r, const uint8_t k[32], const jpoint *p) {
    jpoint table[16], acc;
    memset(&table[0], 0, sizeof(jpoint));
    table[1] = *p;
    for (int i = 2; i < 16; i++)
        jp_add(&table[i], &table[i - 1], p);

    memset(&acc, 0, sizeof(acc));
    for (int byte = 0; byte < 32; byte++) {
        for (int half = 0; half < 2; half++) {
            int nib = half == 0 ? (k[byte] >> 4) : (k[byte] & 0x0f);
            for (int d = 0; d < 4; d++)
                jp_double(&acc, &acc);
            if (nib)
                jp_add(&acc, &acc, &table[nib]);
        }
    }
    *r = acc;
}

int p256_scalar_mult(const uint8_t k[32], const uint8_t px[32], const uint8_t py[32],
                     uint8_t out_x[32], uint8_t out_y[32]) {
    jpoint p, r;
    jp_from_affine(&p, px, py);
    jp_mul(&r, k, &p);
    return jp_to_affine(out_x, out_y, &r);
}

/* comb[i][j] = j * 16^i * G, built on first use */
static jpoint comb[64][16];
static int comb_ready = 0;

static void build_comb(void) {
    jpoint base;
    jp_from_affine(&base, GX, GY);
    for (int i = 0; i < 64; i++) {
        memset(&comb[i][0], 0, sizeof(jpoint));
        comb[i][1] = base;
        for (int j = 2; j < 16; j++)
            jp_add(&comb[i][j], &comb[i][j - 1], &base);
        for (int d = 0; d < 4; d++)
            jp_double(&base, &base);
    }
    comb_ready = 1;
}

/* fixed-base: one table addition per nibble, no doublings */
static void jp_mul_base(jpoint *r, const uint8_t k[32]) {
    jpoint acc;
    if (!comb_ready)
        build_comb();
    memset(&acc, 0, sizeof(acc));
    for (int i = 0; i < 64; i++) {
        uint8_t byte = k[31 - i / 2];
        int nib = (i & 1) ? (byte >> 4) : (byte & 0x0f);
        if (nib)
            jp_add(&acc, &acc, &comb[i][nib]);
    }
    *r = acc;
}

int p256_scalar_mult_base(const uint8_t k[32], uint8_t out_x[32], uint8_t out_y[32]) {
    jpoint r;
    jp_mul_base(&r, k);
    return jp_to_affine(out_x, out_y, &r);
}

int p256_point_add(const uint8_t ax[32], const uint8_t ay[32], const uint8_t bx[32],
                   const uint8_t by[32], uint8_t out_x[32], uint8_t out_y[32]) {
    jpoint a, b, r;
    jp_from_affine(&a, ax, ay);
    jp_from_affine(&b, bx, by);
    jp_add(&r, &a, &b);
    return jp_to_affine(out_x, out_y, &r);
}

int p256_mul_add_base(const uint8_t k[32], const uint8_t ax[32], const uint8_t ay[32],
                      uint8_t out_x[32], uint8_t out_y[32]) {
    jpoint a, kg, r;
    jp_from_affine(&a, ax, ay);
    jp_mul_base(&kg, k);
    jp_add(&r, &a, &kg);
    return jp_to_affine(out_x, out_y, &r);
}

# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled P-256 kernel; same surface as :mod:`pqscms._ec_py`."""

from libc.stdint cimport uint8_t

cdef extern from "_p256.h":
    int p256_scalar_mult(const uint8_t *k, const uint8_t *px, const uint8_t *py,
                         uint8_t *out_x, uint8_t *out_y)
    int p256_scalar_mult_base(const uint8_t *k, uint8_t *out_x, uint8_t *out_y)
    int p256_point_add(const uint8_t *ax, const uint8_t *ay, const uint8_t *bx,
                       const uint8_t *by, uint8_t *out_x, uint8_t *out_y)
    int p256_mul_add_base(const uint8_t *k, const uint8_t *ax, const uint8_t *ay,
                          uint8_t *out_x, uint8_t *out_y)

KERNEL = "cython"



cdef object _result(int ok, uint8_t *x, uint8_t *y):
    if not ok:
        return None
    return (int.from_bytes(x[:32], "big"), int.from_bytes(y[:32], "big"))


def scalar_mult_base(k):
    cdef bytes kb = k.to_bytes(32, "big")
    cdef uint8_t x[32]
    cdef uint8_t y[32]
    cdef int ok = p256_scalar_mult_base(kb, x, y)
    return _result(ok, x, y)


def scalar_mult(k, px, py):
    cdef bytes kb = k.to_bytes(32, "big")
    cdef bytes xb = px.to_bytes(32, "big")
    cdef bytes yb = py.to_bytes(32, "big")
    cdef uint8_t x[32]
    cdef uint8_t y[32]
    cdef int ok = p256_scalar_mult(kb, xb, yb, x, y)
    return _result(ok, x, y)


def point_add(ax, ay, bx, by):
    cdef bytes axb = ax.to_bytes(32, "big")
    cdef bytes ayb = ay.to_bytes(32, "big")
    cdef bytes bxb = bx.to_bytes(32, "big")
    cdef bytes byb = by.to_bytes(32, "big")
    cdef uint8_t x[32]
    cdef uint8_t y[32]
    cdef int ok = p256_point_add(axb, ayb, bxb, byb, x, y)
    return _result(ok, x, y)


def mul_add_base(k, ax, ay):
    """``A + k*G`` in one call (cocoon expansion)."""
    cdef bytes kb = k.to_bytes(32, "big")
    cdef bytes axb = ax.to_bytes(32, "big")
    cdef bytes ayb = ay.to_bytes(32, "big")
    cdef uint8_t x[32]
    cdef uint8_t y[32]
    cdef int ok = p256_mul_add_base(kb, axb, ayb, x, y)
    return _result(ok, x, y)

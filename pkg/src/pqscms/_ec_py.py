"""Pure-Python P-256 kernel.

Fallback for :mod:`pqscms._ec_core`. Jacobian coordinates, 4-bit fixed
window for arbitrary points and a lazily built comb table for the base point.
Not constant time.
"""

from __future__ import annotations

KERNEL = "python"

P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

_INF = (1, 1, 0)
_base_table: list[list[tuple[int, int] | None]] | None = None


def _double(pt):
    x, y, z = pt
    if z == 0 or y == 0:
        return _INF
    delta = z * z % P
    gamma = y * y % P
    beta = x * gamma % P
    alpha = 3 * (x - delta) * (x + delta) % P
    x3 = (alpha * alpha - 8 * beta) % P
    z3 = ((y + z) * (y + z) - gamma - delta) % P
    y3 = (alpha * (4 * beta - x3) - 8 * gamma * gamma) % P
    return (x3, y3, z3)


def _add(p1, p2):
    x1, y1, z1 = p1
    x2, y2, z2 = p2
    if z1 == 0:
        return p2
    if z2 == 0:
        return p1
    z1z1 = z1 * z1 % P
    z2z2 = z2 * z2 % P
    u1 = x1 * z2z2 % P
    u2 = x2 * z1z1 % P
    s1 = y1 * z2 * z2z2 % P
    s2 = y2 * z1 * z1z1 % P
    if u1 == u2:
        return _double(p1) if s1 == s2 else _INF
    h = (u2 - u1) % P
    i = 4 * h * h % P
    j = h * i % P
    r = 2 * (s2 - s1) % P
    v = u1 * i % P
    x3 = (r * r - j - 2 * v) % P
    y3 = (r * (v - x3) - 2 * s1 * j) % P
    z3 = ((z1 + z2) * (z1 + z2) - z1z1 - z2z2) * h % P
    return (x3, y3, z3)


def _add_affine(p1, x2, y2):
    # mixed addition, second operand has z = 1
    x1, y1, z1 = p1
    if z1 == 0:
        return (x2, y2, 1)
    z1z1 = z1 * z1 % P
    u2 = x2 * z1z1 % P
    s2 = y2 * z1 * z1z1 % P
    if u2 == x1:
        return _double(p1) if s2 == y1 else _INF
    h = (u2 - x1) % P
    hh = h * h % P
    i = 4 * hh % P
    j = h * i % P
    r = 2 * (s2 - y1) % P
    v = x1 * i % P
    x3 = (r * r - j - 2 * v) % P
    y3 = (r * (v - x3) - 2 * y1 * j) % P
    z3 = ((z1 + h) * (z1 + h) - z1z1 - hh) % P
    return (x3, y3, z3)


def _to_affine(pt):
    x, y, z = pt
    if z == 0:
        return None
    zi = pow(z, -1, P)
    zi2 = zi * zi % P
    return (x * zi2 % P, y * zi2 * zi % P)


def _window_mult(k, x, y):
    table = [_INF, (x, y, 1)]
    for _ in range(14):
        table.append(_add_affine(table[-1], x, y))
    acc = _INF
    for shift in range(252, -4, -4):
        acc = _double(_double(_double(_double(acc))))
        nib = (k >> shift) & 0xF
        if nib:
            acc = _add(acc, table[nib])
    return acc


def _build_base_table():
    # row i holds j * 16^i * G for j in 0..15, affine
    rows = []
    base = (GX, GY, 1)
    for _ in range(64):
        row = [None]
        acc = base
        for _j in range(1, 16):
            row.append(_to_affine(acc))
            acc = _add(acc, base)
        rows.append(row)
        base = acc  # 16 * base
    return rows


def scalar_mult_base(k: int):
    global _base_table
    if _base_table is None:
        _base_table = _build_base_table()
    acc = _INF
    for i in range(64):
        nib = (k >> (4 * i)) & 0xF
        if nib:
            x, y = _base_table[i][nib]
            acc = _add_affine(acc, x, y)
    return _to_affine(acc)


def scalar_mult(k: int, px: int, py: int):
    return _to_affine(_window_mult(k, px, py))


def point_add(ax: int, ay: int, bx: int, by: int):
    return _to_affine(_add_affine((ax, ay, 1), bx, by))


def mul_add_base(k: int, ax: int, ay: int):
    kg = scalar_mult_base(k)
    if kg is None:
        return (ax, ay)
    return point_add(ax, ay, *kg)

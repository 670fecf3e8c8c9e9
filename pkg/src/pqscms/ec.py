"""P-256 group arithmetic used by the butterfly key derivations.

Point arithmetic runs on a compiled kernel when the extension was built
and on a pure-Python kernel otherwise. Set ``PQSCMS_PURE_PYTHON=1`` to force
the fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from types import ModuleType

from . import _ec_py
from .errors import InvalidPoint

P = _ec_py.P
N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
A_COEF = P - 3
B_COEF = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
COMPRESSED_LEN = 33


def _load_kernel() -> ModuleType:
    if os.environ.get("PQSCMS_PURE_PYTHON"):
        return _ec_py
    try:
        from . import _ec_core
    except ImportError:
        return _ec_py
    return _ec_core


_kernel = _load_kernel()
KERNEL: str = _kernel.KERNEL


def get_kernel(name: str | None = None) -> ModuleType:
    """Return the active kernel, or a specific one (``"python"``/``"cython"``)."""
    if name is None:
        return _kernel
    if name == "python":
        return _ec_py
    if name == "cython":
        from . import _ec_core

        return _ec_core
    raise ValueError(f"unknown kernel {name!r}")


@dataclass(frozen=True)
class EcPoint:
    """Affine P-256 point. ``IDENTITY`` is the point at infinity."""

    x: int
    y: int

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.y == 0

    def encode(self) -> bytes:
        """33-byte SEC1 compressed form."""
        if self.is_identity:
            raise InvalidPoint("the identity has no compressed encoding")
        return bytes([2 | (self.y & 1)]) + self.x.to_bytes(32, "big")

    @classmethod
    def decode(cls, data: bytes) -> EcPoint:
        if len(data) != COMPRESSED_LEN or data[0] not in (2, 3):
            raise InvalidPoint("expected a 33-byte compressed point")
        x = int.from_bytes(data[1:], "big")
        if x >= P:
            raise InvalidPoint("x coordinate out of range")
        rhs = (x * x * x + A_COEF * x + B_COEF) % P
        y = pow(rhs, (P + 1) // 4, P)
        if y * y % P != rhs:
            raise InvalidPoint("x is not on the curve")
        if (y & 1) != (data[0] & 1):
            y = P - y
        return cls(x, y)


IDENTITY = EcPoint(0, 0)
G = EcPoint(_ec_py.GX, _ec_py.GY)


def is_on_curve(pt: EcPoint) -> bool:
    if pt.is_identity:
        return True
    if not (0 <= pt.x < P and 0 <= pt.y < P):
        return False
    return (pt.y * pt.y - (pt.x * pt.x * pt.x + A_COEF * pt.x + B_COEF)) % P == 0


def _check(pt: EcPoint) -> None:
    if not is_on_curve(pt):
        raise InvalidPoint(f"point not on P-256: {pt!r}")


def _wrap(res) -> EcPoint:
    return IDENTITY if res is None else EcPoint(*res)


def ec_scalar_mul(s: int) -> EcPoint:
    """``s * G``."""
    s %= N
    if s == 0:
        return IDENTITY
    return _wrap(_kernel.scalar_mult_base(s))


def ec_point_mul(s: int, pt: EcPoint) -> EcPoint:
    _check(pt)
    s %= N
    if s == 0 or pt.is_identity:
        return IDENTITY
    return _wrap(_kernel.scalar_mult(s, pt.x, pt.y))


def ec_point_add(p1: EcPoint, p2: EcPoint) -> EcPoint:
    _check(p1)
    _check(p2)
    if p1.is_identity:
        return p2
    if p2.is_identity:
        return p1
    return _wrap(_kernel.point_add(p1.x, p1.y, p2.x, p2.y))


def ec_point_neg(pt: EcPoint) -> EcPoint:
    _check(pt)
    if pt.is_identity:
        return pt
    return EcPoint(pt.x, (P - pt.y) % P)


def ec_mul_add_base(s: int, pt: EcPoint) -> EcPoint:
    """``pt + s * G`` in a single kernel call."""
    _check(pt)
    s %= N
    if pt.is_identity:
        return ec_scalar_mul(s)
    if s == 0:
        return pt
    return _wrap(_kernel.mul_add_base(s, pt.x, pt.y))


def ec_scalar_add_mod_n(x: int, y: int) -> int:
    return (x + y) % N

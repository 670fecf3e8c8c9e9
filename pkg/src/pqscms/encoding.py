"""Canonical big-endian byte encoding shared by every wire structure.

Fixed-width unsigned integers, fixed-length byte fields, and variable
fields carrying a 2- or 4-byte length prefix. Readers are strict: short
input and trailing bytes raise :class:`DecodeError`.
"""

from __future__ import annotations

import struct

from .errors import DecodeError, FieldOverflow

_FMT = {1: ">B", 2: ">H", 4: ">I", 8: ">Q"}


class Writer:
    def __init__(self) -> None:
        self._buf = bytearray()

    def uint(self, value: int, width: int) -> Writer:
        if not 0 <= value < 1 << (8 * width):
            raise FieldOverflow(f"{value} does not fit in {width} bytes")
        self._buf += struct.pack(_FMT[width], value)
        return self

    def fixed(self, data: bytes, length: int) -> Writer:
        if len(data) != length:
            raise FieldOverflow(f"expected {length} bytes, got {len(data)}")
        self._buf += data
        return self

    def raw(self, data: bytes) -> Writer:
        self._buf += data
        return self

    def var(self, data: bytes, width: int = 2) -> Writer:
        self.uint(len(data), width)
        self._buf += data
        return self

    def getvalue(self) -> bytes:
        return bytes(self._buf)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = memoryview(bytes(data))
        self._pos = 0

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError(f"truncated input: need {n} bytes at offset {self._pos}")
        out = bytes(self._data[self._pos : self._pos + n])
        self._pos += n
        return out

    def uint(self, width: int) -> int:
        return struct.unpack(_FMT[width], self.take(width))[0]

    def var(self, width: int = 2) -> bytes:
        return self.take(self.uint(width))

    def expect(self, tag: int) -> None:
        got = self.uint(1)
        if got != tag:
            raise DecodeError(f"expected tag 0x{tag:02x}, got 0x{got:02x}")

    def done(self) -> None:
        if self.remaining:
            raise DecodeError(f"{self.remaining} trailing bytes")

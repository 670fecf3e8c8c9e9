"""Independent reference implementations used only by the tests."""

from __future__ import annotations

from cryptography.hazmat.primitives.asymmetric import ec as cec

P256_N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551


# -- AES-128, straight from the FIPS-197 description -------------------------

def _xtime(a: int) -> int:
    a <<= 1
    return (a ^ 0x11B) & 0xFF if a & 0x100 else a


def _gmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a = _xtime(a)
        b >>= 1
    return out


def _build_sbox() -> list[int]:
    sbox = [0] * 256
    for x in range(256):
        inv = 0 if x == 0 else next(y for y in range(1, 256) if _gmul(x, y) == 1)
        s = inv
        for shift in range(1, 5):
            s ^= ((inv << shift) | (inv >> (8 - shift))) & 0xFF
        sbox[x] = s ^ 0x63
    return sbox


SBOX = _build_sbox()


def _expand_key(key: bytes) -> list[list[int]]:
    words = [list(key[i:i + 4]) for i in range(0, 16, 4)]
    rcon = 1
    for i in range(4, 44):
        w = list(words[i - 1])
        if i % 4 == 0:
            w = w[1:] + w[:1]
            w = [SBOX[b] for b in w]
            w[0] ^= rcon
            rcon = _xtime(rcon)
        words.append([a ^ b for a, b in zip(words[i - 4], w)])
    return [sum(words[r * 4:r * 4 + 4], []) for r in range(11)]


def aes128_encrypt_block(key: bytes, block: bytes) -> bytes:
    assert len(key) == 16 and len(block) == 16
    rks = _expand_key(key)
    s = [b ^ k for b, k in zip(block, rks[0])]  # column-major state
    for rnd in range(1, 11):
        s = [SBOX[b] for b in s]
        s = [s[(c * 4 + r + 4 * r) % 16] for c in range(4) for r in range(4)]  # ShiftRows
        if rnd != 10:
            mixed = []
            for c in range(4):
                a = s[c * 4:c * 4 + 4]
                mixed += [
                    _gmul(a[0], 2) ^ _gmul(a[1], 3) ^ a[2] ^ a[3],
                    a[0] ^ _gmul(a[1], 2) ^ _gmul(a[2], 3) ^ a[3],
                    a[0] ^ a[1] ^ _gmul(a[2], 2) ^ _gmul(a[3], 3),
                    _gmul(a[0], 3) ^ a[1] ^ a[2] ^ _gmul(a[3], 2),
                ]
            s = mixed
        s = [b ^ k for b, k in zip(s, rks[rnd])]
    return bytes(s)


def f1_reference(ck: bytes, index: int) -> int:
    blocks = b"".join(aes128_encrypt_block(ck, (2 * index + j).to_bytes(16, "big")) for j in (0, 1))
    return int.from_bytes(blocks, "big") % (P256_N - 1) + 1


# -- P-256 via OpenSSL ---------------------------------------------------------

def oracle_base_mul(k: int) -> tuple[int, int] | None:
    """``k*G`` as affine coordinates, None for the identity."""
    k %= P256_N
    if k == 0:
        return None
    nums = cec.derive_private_key(k, cec.SECP256R1()).public_key().public_numbers()
    return nums.x, nums.y


def oracle_compressed(k: int) -> bytes:
    from cryptography.hazmat.primitives import serialization

    pub = cec.derive_private_key(k % P256_N, cec.SECP256R1()).public_key()
    return pub.public_bytes(serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint)

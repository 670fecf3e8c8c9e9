"""Uniform interface over the signature schemes, the KEM, f1 and hashing.

Native backends come from ``pqcrypto`` (PQClean) and ``cryptography``
(OpenSSL). A provider created with a ``seed`` routes every random draw
through a seeded generator and switches ML-DSA-44 and ML-KEM-512 to the
pure-Python FIPS 204/203 implementations, whose key generation and
encapsulation accept explicit seeds. Seeded mode exists for reproducible
transcripts only; it is not a secure RNG.
"""

from __future__ import annotations

import enum
import hashlib
import os
import random
import secrets
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec as _cec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from dilithium_py.ml_dsa import ML_DSA_44
from kyber_py.ml_kem import ML_KEM_512
from pqcrypto.kem import ml_kem_512
from pqcrypto.sign import falcon_padded_512, ml_dsa_44, sphincs_sha2_128f_simple

from . import ec
from .encoding import Reader, Writer
from .errors import BackendFailure, DecryptionFailure, UnsupportedScheme


class SchemeId(enum.IntEnum):
    """Wire code of each algorithm (one byte in certificates)."""

    ECDSA_P256 = 1
    DILITHIUM2 = 2
    FALCON512 = 3
    SPHINCS_SHA2_128F = 4
    KYBER512 = 5

    @property
    def is_kem(self) -> bool:
        return self is SchemeId.KYBER512

    @property
    def is_signature(self) -> bool:
        return not self.is_kem

    @property
    def is_classical(self) -> bool:
        return self is SchemeId.ECDSA_P256

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    SchemeId.ECDSA_P256: "ECDSA P-256",
    SchemeId.DILITHIUM2: "Dilithium-2",
    SchemeId.FALCON512: "Falcon-512",
    SchemeId.SPHINCS_SHA2_128F: "SPHINCS+ SHA2-128f",
    SchemeId.KYBER512: "Kyber-512",
}


@dataclass(frozen=True)
class SchemeProfile:
    """Analytic length parameters used for the length tables.

    ``scheme`` may be a plain string so that schemes outside
    :class:`SchemeId` can be fed to the report machinery.
    """

    scheme: SchemeId | str
    security_level: int
    pk_len: int
    sig_len: int | None = None
    ct_len: int | None = None
    classical: bool = False

    @property
    def label(self) -> str:
        return self.scheme.label if isinstance(self.scheme, SchemeId) else str(self.scheme)


DEFAULT_PROFILES: dict[SchemeId, SchemeProfile] = {
    SchemeId.ECDSA_P256: SchemeProfile(SchemeId.ECDSA_P256, 0, 33, sig_len=65, classical=True),
    SchemeId.DILITHIUM2: SchemeProfile(SchemeId.DILITHIUM2, 2, 1312, sig_len=2420),
    SchemeId.FALCON512: SchemeProfile(SchemeId.FALCON512, 1, 898, sig_len=666),
    SchemeId.SPHINCS_SHA2_128F: SchemeProfile(SchemeId.SPHINCS_SHA2_128F, 1, 33, sig_len=16720),
    SchemeId.KYBER512: SchemeProfile(SchemeId.KYBER512, 1, 800, ct_len=768),
}

PROBE_MESSAGE = b"pqscms keypair self-test"
AES_KEY_LEN = 16
AEAD_NONCE_LEN = 12
MAX_KEM_PLAINTEXT = 1 << 16
DIGEST_LEN = 8
ECDSA_SIG_TAG = 0x80
ECDSA_SIG_LEN = 65


@dataclass(frozen=True)
class SigKeyPair:
    scheme: SchemeId
    public_key: bytes
    secret_key: bytes = field(repr=False)


@dataclass(frozen=True)
class KemKeyPair:
    public_key: bytes
    secret_key: bytes = field(repr=False)
    scheme: SchemeId = SchemeId.KYBER512


@dataclass(frozen=True)
class ExpansionKey:
    ck: bytes = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.ck) != AES_KEY_LEN:
            raise ValueError(f"expansion key must be {AES_KEY_LEN} bytes")


@dataclass(frozen=True)
class HybridCiphertext:
    """KEM ciphertext plus AES-GCM sealed payload."""

    kem_ciphertext: bytes
    nonce: bytes
    aead_ciphertext: bytes

    def encode(self) -> bytes:
        return (
            Writer()
            .var(self.kem_ciphertext)
            .fixed(self.nonce, AEAD_NONCE_LEN)
            .var(self.aead_ciphertext, 4)
            .getvalue()
        )

    @classmethod
    def decode(cls, data: bytes) -> HybridCiphertext:
        r = Reader(data)
        out = cls(r.var(), r.take(AEAD_NONCE_LEN), r.var(4))
        r.done()
        return out


class Rng:
    """OS randomness, or a seeded stream when ``seed`` is given."""

    def __init__(self, seed: int | None = None) -> None:
        self.seed = seed
        self._prng = random.Random(seed) if seed is not None else None

    @property
    def seeded(self) -> bool:
        return self._prng is not None

    def bytes(self, n: int) -> bytes:
        if self._prng is None:
            return os.urandom(n)
        return self._prng.randbytes(n)

    def below(self, upper: int) -> int:
        if self._prng is None:
            return secrets.randbelow(upper)
        return self._prng.randrange(upper)

    def scalar(self) -> int:
        """Uniform in [1, n-1]."""
        return self.below(ec.N - 1) + 1


# -- signature backends -------------------------------------------------------


class SignatureBackend:
    """One signature algorithm. Subclass and register to plug in a scheme."""

    scheme: SchemeId
    public_key_len: int
    signature_len: int | None  # None for variable-length signatures

    def keygen(self, rng: Rng) -> tuple[bytes, bytes]:
        raise NotImplementedError

    def sign(self, secret_key: bytes, message: bytes, rng: Rng) -> bytes:
        raise NotImplementedError

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        raise NotImplementedError


class EcdsaP256Backend(SignatureBackend):
    """ECDSA P-256 / SHA-256 with RFC 6979 nonces.

    Signatures are ``0x80 || r || s`` (65 bytes); keys are 33-byte
    compressed points and 32-byte scalars.
    """

    scheme = SchemeId.ECDSA_P256
    public_key_len = ec.COMPRESSED_LEN
    signature_len = ECDSA_SIG_LEN

    def keygen(self, rng: Rng) -> tuple[bytes, bytes]:
        d = rng.scalar()
        return ec.ec_scalar_mul(d).encode(), d.to_bytes(32, "big")

    def sign(self, secret_key: bytes, message: bytes, rng: Rng) -> bytes:
        d = int.from_bytes(secret_key, "big")
        if not 0 < d < ec.N:
            raise BackendFailure("ECDSA secret scalar out of range")
        key = _cec.derive_private_key(d, _cec.SECP256R1())
        der = key.sign(message, _cec.ECDSA(hashes.SHA256(), deterministic_signing=True))
        r, s = decode_dss_signature(der)
        return bytes([ECDSA_SIG_TAG]) + r.to_bytes(32, "big") + s.to_bytes(32, "big")

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        if len(signature) != ECDSA_SIG_LEN or signature[0] != ECDSA_SIG_TAG:
            return False
        try:
            pub = _cec.EllipticCurvePublicKey.from_encoded_point(_cec.SECP256R1(), public_key)
            der = encode_dss_signature(
                int.from_bytes(signature[1:33], "big"), int.from_bytes(signature[33:], "big")
            )
            pub.verify(der, message, _cec.ECDSA(hashes.SHA256()))
        except Exception:  # noqa: BLE001 - any malformed input is a failed verification
            return False
        return True


class PqcryptoSignBackend(SignatureBackend):
    def __init__(self, scheme: SchemeId, module, fixed_length: bool = True) -> None:
        self.scheme = scheme
        self._mod = module
        self.public_key_len = module.PUBLIC_KEY_SIZE
        self.signature_len = module.SIGNATURE_SIZE if fixed_length else None

    def keygen(self, rng: Rng) -> tuple[bytes, bytes]:
        try:
            return self._mod.generate_keypair()
        except Exception as exc:  # noqa: BLE001
            raise BackendFailure(f"{self.scheme.name} keygen failed: {exc}") from exc

    def sign(self, secret_key: bytes, message: bytes, rng: Rng) -> bytes:
        try:
            return self._mod.sign(secret_key, message)
        except Exception as exc:  # noqa: BLE001
            raise BackendFailure(f"{self.scheme.name} sign failed: {exc}") from exc

    def verify(self, public_key: bytes, message: bytes, signature: bytes) -> bool:
        try:
            return bool(self._mod.verify(public_key, message, signature))
        except Exception:  # noqa: BLE001
            return False


class MlDsa44Backend(PqcryptoSignBackend):
    """ML-DSA-44. Seeded RNGs use deterministic pure-Python keygen/signing."""

    def __init__(self) -> None:
        super().__init__(SchemeId.DILITHIUM2, ml_dsa_44)

    def keygen(self, rng: Rng) -> tuple[bytes, bytes]:
        if rng.seeded:
            return ML_DSA_44.key_derive(rng.bytes(32))
        return super().keygen(rng)

    def sign(self, secret_key: bytes, message: bytes, rng: Rng) -> bytes:
        if rng.seeded:
            return ML_DSA_44.sign(secret_key, message, deterministic=True)
        return super().sign(secret_key, message, rng)


class MlKem512Backend:
    scheme = SchemeId.KYBER512
    public_key_len = ml_kem_512.PUBLIC_KEY_SIZE
    ciphertext_len = ml_kem_512.CIPHERTEXT_SIZE

    def keygen(self, rng: Rng) -> tuple[bytes, bytes]:
        if rng.seeded:
            return ML_KEM_512.key_derive(rng.bytes(64))
        return ml_kem_512.generate_keypair()

    def encaps(self, public_key: bytes, rng: Rng) -> tuple[bytes, bytes]:
        """Return ``(ciphertext, shared_secret)``."""
        if len(public_key) != self.public_key_len:
            raise BackendFailure("malformed KEM public key")
        try:
            if rng.seeded:
                shared, ct = ML_KEM_512._encaps_internal(public_key, rng.bytes(32))
                return ct, shared
            return ml_kem_512.encrypt(public_key)
        except Exception as exc:  # noqa: BLE001
            raise BackendFailure(f"encapsulation failed: {exc}") from exc

    def decaps(self, secret_key: bytes, ciphertext: bytes) -> bytes:
        try:
            return ml_kem_512.decrypt(secret_key, ciphertext)
        except Exception as exc:  # noqa: BLE001
            raise DecryptionFailure(f"decapsulation failed: {exc}") from exc


def default_signature_backends() -> dict[SchemeId, SignatureBackend]:
    return {
        SchemeId.ECDSA_P256: EcdsaP256Backend(),
        SchemeId.DILITHIUM2: MlDsa44Backend(),
        # padded Falcon keeps signatures at exactly 666 bytes
        SchemeId.FALCON512: PqcryptoSignBackend(SchemeId.FALCON512, falcon_padded_512),
        SchemeId.SPHINCS_SHA2_128F: PqcryptoSignBackend(
            SchemeId.SPHINCS_SHA2_128F, sphincs_sha2_128f_simple
        ),
    }


_PUBLIC_KEY_LENGTHS: dict[SchemeId, int] = {
    s: b.public_key_len for s, b in default_signature_backends().items()
}
_PUBLIC_KEY_LENGTHS[SchemeId.KYBER512] = MlKem512Backend.public_key_len


def public_key_length(scheme: SchemeId) -> int:
    """Live public-key length for ``scheme`` (used when decoding certificates)."""
    try:
        return _PUBLIC_KEY_LENGTHS[SchemeId(scheme)]
    except (KeyError, ValueError) as exc:
        raise UnsupportedScheme(f"unknown scheme {scheme!r}") from exc


class CryptoProvider:
    """Entry point for every cryptographic operation in the package.

    Thread-safe after construction; key material is immutable.
    """

    def __init__(self, seed: int | None = None) -> None:
        self.rng = Rng(seed)
        self._sig: dict[SchemeId, SignatureBackend] = default_signature_backends()
        self._kem = MlKem512Backend()

    @property
    def seeded(self) -> bool:
        return self.rng.seeded

    def register_signature_backend(self, backend: SignatureBackend) -> None:
        self._sig[backend.scheme] = backend
        _PUBLIC_KEY_LENGTHS[backend.scheme] = backend.public_key_len

    def backend(self, scheme: SchemeId) -> SignatureBackend:
        if scheme not in self._sig:
            raise UnsupportedScheme(f"{SchemeId(scheme).name} is not a signature scheme")
        return self._sig[scheme]

    def random_bytes(self, n: int) -> bytes:
        return self.rng.bytes(n)

    def random_scalar(self) -> int:
        return self.rng.scalar()

    def new_expansion_key(self) -> ExpansionKey:
        return ExpansionKey(self.rng.bytes(AES_KEY_LEN))

    def generate_signing_keypair(self, scheme: SchemeId, self_test: bool = True) -> SigKeyPair:
        backend = self.backend(SchemeId(scheme))
        pk, sk = backend.keygen(self.rng)
        kp = SigKeyPair(backend.scheme, pk, sk)
        if self_test and not backend.verify(pk, PROBE_MESSAGE, backend.sign(sk, PROBE_MESSAGE, self.rng)):
            raise BackendFailure(f"{backend.scheme.name} keypair failed its self-test")
        return kp

    def ec_keypair_from_scalar(self, d: int) -> SigKeyPair:
        return SigKeyPair(SchemeId.ECDSA_P256, ec.ec_scalar_mul(d).encode(), d.to_bytes(32, "big"))

    def sign(self, kp: SigKeyPair, message: bytes) -> bytes:
        return self.backend(kp.scheme).sign(kp.secret_key, message, self.rng)

    def verify(self, scheme: SchemeId, public_key: bytes, message: bytes, sig: bytes) -> bool:
        try:
            backend = self.backend(SchemeId(scheme))
        except (UnsupportedScheme, ValueError):
            return False
        return backend.verify(public_key, message, sig)

    def generate_kem_keypair(self) -> KemKeyPair:
        pk, sk = self._kem.keygen(self.rng)
        return KemKeyPair(pk, sk)

    def kem_encrypt(self, recipient_pk: bytes, plaintext: bytes) -> HybridCiphertext:
        """KEM-DEM: ML-KEM-512 shared secret keys AES-256-GCM, KEM ciphertext as AAD."""
        if len(plaintext) > MAX_KEM_PLAINTEXT:
            raise BackendFailure("plaintext exceeds 2^16 bytes")
        kem_ct, shared = self._kem.encaps(recipient_pk, self.rng)
        nonce = self.rng.bytes(AEAD_NONCE_LEN)
        sealed = AESGCM(shared).encrypt(nonce, plaintext, kem_ct)
        return HybridCiphertext(kem_ct, nonce, sealed)

    def kem_decrypt(self, kp: KemKeyPair, ct: HybridCiphertext) -> bytes:
        if len(ct.nonce) != AEAD_NONCE_LEN:
            raise DecryptionFailure("malformed nonce")
        shared = self._kem.decaps(kp.secret_key, ct.kem_ciphertext)
        try:
            return AESGCM(shared).decrypt(ct.nonce, ct.aead_ciphertext, ct.kem_ciphertext)
        except InvalidTag as exc:
            raise DecryptionFailure("authentication tag mismatch") from exc


def f1_expand(ck: ExpansionKey | bytes, index: int) -> int:
    """AES-128 expansion of a certificate index into a scalar in [1, n-1].

    ``AES(ck, be128(2i)) || AES(ck, be128(2i+1))`` read as a 256-bit
    integer, reduced mod n-1, plus one.
    """
    key = ck.ck if isinstance(ck, ExpansionKey) else ExpansionKey(ck).ck
    if not 0 <= index < 1 << 64:
        raise ValueError("index must be a 64-bit unsigned integer")
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    block = enc.update((2 * index).to_bytes(16, "big") + (2 * index + 1).to_bytes(16, "big"))
    return int.from_bytes(block, "big") % (ec.N - 1) + 1


def cert_digest(encoded_cert: bytes) -> bytes:
    """Low-order (final) 8 bytes of SHA-256."""
    return hashlib.sha256(encoded_cert).digest()[-DIGEST_LEN:]

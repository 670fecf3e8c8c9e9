"""Explicit certificates: pure-ECC, pure-PQC and hybrid (ECC key, PQC signature).

Wire layout (big-endian)::

    version      1
    kind         1
    issuer_id    8   digest of the issuer's encoding, zeros when self-signed
    subject_id   8
    start        4   seconds
    duration     4   seconds
    psid         4
    vki_scheme   1
    sig_scheme   1
    vki_key      k   length fixed by vki_scheme
    sig_len      2
    signature    s

Everything except the key and the signature totals 34 bytes, so an
encoded certificate is exactly ``34 + k + s`` bytes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from .encoding import Reader, Writer
from .errors import DecodeError, FieldOverflow, SchemeMismatch
from .provider import CryptoProvider, SchemeId, SigKeyPair, cert_digest, public_key_length

CERT_VERSION = 3
ZERO_ID = bytes(8)
HEADER_LEN = 32
OVERHEAD = HEADER_LEN + 2  # c


class CertKind(enum.IntEnum):
    PURE_ECC = 1
    PURE_PQC = 2
    HYBRID = 3


def kind_for(vki_scheme: SchemeId, sig_scheme: SchemeId) -> CertKind:
    vki_ec, sig_ec = SchemeId(vki_scheme).is_classical, SchemeId(sig_scheme).is_classical
    if vki_ec and sig_ec:
        return CertKind.PURE_ECC
    if not vki_ec and not sig_ec:
        return CertKind.PURE_PQC
    if vki_ec:
        return CertKind.HYBRID
    raise SchemeMismatch("a PQC subject key under an ECC issuer signature is not a defined kind")


@dataclass(frozen=True)
class TbsCertificate:
    issuer_id: bytes
    subject_id: bytes
    validity_start: int
    validity_duration: int
    psid: int
    vki_scheme: SchemeId
    sig_scheme: SchemeId
    vki_key: bytes
    version: int = CERT_VERSION

    @property
    def kind(self) -> CertKind:
        return kind_for(self.vki_scheme, self.sig_scheme)

    @property
    def validity_end(self) -> int:
        return self.validity_start + self.validity_duration

    def encode(self) -> bytes:
        for scheme in (self.vki_scheme, self.sig_scheme):
            if SchemeId(scheme).is_kem:
                raise SchemeMismatch("certificates carry signature schemes only")
        if len(self.vki_key) != public_key_length(self.vki_scheme):
            raise FieldOverflow(
                f"{SchemeId(self.vki_scheme).name} key must be "
                f"{public_key_length(self.vki_scheme)} bytes, got {len(self.vki_key)}"
            )
        return (
            Writer()
            .uint(self.version, 1)
            .uint(self.kind, 1)
            .fixed(self.issuer_id, 8)
            .fixed(self.subject_id, 8)
            .uint(self.validity_start, 4)
            .uint(self.validity_duration, 4)
            .uint(self.psid, 4)
            .uint(self.vki_scheme, 1)
            .uint(self.sig_scheme, 1)
            .fixed(self.vki_key, len(self.vki_key))
            .getvalue()
        )

    @classmethod
    def read(cls, r: Reader) -> TbsCertificate:
        version = r.uint(1)
        kind = r.uint(1)
        issuer_id, subject_id = r.take(8), r.take(8)
        start, duration, psid = r.uint(4), r.uint(4), r.uint(4)
        try:
            vki_scheme, sig_scheme = SchemeId(r.uint(1)), SchemeId(r.uint(1))
            expected = kind_for(vki_scheme, sig_scheme)
            key_len = public_key_length(vki_scheme)
        except (ValueError, SchemeMismatch) as exc:
            raise DecodeError(f"bad scheme pair: {exc}") from exc
        if kind != expected:
            raise DecodeError(f"kind byte {kind} disagrees with scheme pair ({expected.name})")
        if vki_scheme.is_kem or sig_scheme.is_kem:
            raise DecodeError("KEM scheme in a certificate")
        return cls(
            issuer_id, subject_id, start, duration, psid, vki_scheme, sig_scheme,
            r.take(key_len), version,
        )


@dataclass(frozen=True)
class Certificate:
    tbs: TbsCertificate
    signature: bytes

    @property
    def kind(self) -> CertKind:
        return self.tbs.kind

    @property
    def is_self_signed(self) -> bool:
        return self.tbs.issuer_id == ZERO_ID

    def encode(self) -> bytes:
        return self._encoded

    @cached_property
    def _encoded(self) -> bytes:
        return Writer().raw(self.tbs.encode()).var(self.signature).getvalue()

    @cached_property
    def digest(self) -> bytes:
        return cert_digest(self.encode())

    @classmethod
    def read(cls, r: Reader) -> Certificate:
        tbs = TbsCertificate.read(r)
        return cls(tbs, r.var())

    @classmethod
    def decode(cls, data: bytes) -> Certificate:
        r = Reader(data)
        cert = cls.read(r)
        r.done()
        return cert


def encode_certificate(cert: Certificate) -> bytes:
    return cert.encode()


def decode_certificate(data: bytes) -> Certificate:
    return Certificate.decode(data)


_default_provider: CryptoProvider | None = None


def _verifier(provider: CryptoProvider | None) -> CryptoProvider:
    global _default_provider
    if provider is not None:
        return provider
    if _default_provider is None:
        _default_provider = CryptoProvider()
    return _default_provider


def issue_certificate(
    issuer_keypair: SigKeyPair,
    issuer_cert_id: bytes,
    tbs: TbsCertificate,
    provider: CryptoProvider | None = None,
) -> Certificate:
    if tbs.sig_scheme != issuer_keypair.scheme:
        raise SchemeMismatch(
            f"tbs names {SchemeId(tbs.sig_scheme).name} but the issuer key is "
            f"{issuer_keypair.scheme.name}"
        )
    if tbs.issuer_id != issuer_cert_id:
        raise ValueError("tbs.issuer_id must equal the issuer certificate id")
    signature = _verifier(provider).sign(issuer_keypair, tbs.encode())
    return Certificate(tbs, signature)


def verify_certificate(
    cert: Certificate, issuer_cert: Certificate, provider: CryptoProvider | None = None
) -> bool:
    """Issuer linkage, signature, and validity nesting. Never raises."""
    try:
        tbs, itbs = cert.tbs, issuer_cert.tbs
        if cert.is_self_signed:
            if cert != issuer_cert or tbs.vki_scheme != tbs.sig_scheme:
                return False
        elif tbs.issuer_id != issuer_cert.digest:
            return False
        if tbs.sig_scheme != itbs.vki_scheme:
            return False
        if tbs.validity_start < itbs.validity_start or tbs.validity_end > itbs.validity_end:
            return False
        return _verifier(provider).verify(
            tbs.sig_scheme, itbs.vki_key, tbs.encode(), cert.signature
        )
    except Exception:  # noqa: BLE001 - malformed certificates simply fail
        return False


def save_certificate(cert: Certificate, directory: str | Path) -> Path:
    """Write ``cert`` to ``directory/<hex digest>``."""
    path = Path(directory) / cert.digest.hex()
    path.write_bytes(cert.encode())
    return path


def load_certificate(path: str | Path) -> Certificate:
    return Certificate.decode(Path(path).read_bytes())


@dataclass(frozen=True)
class LengthProfile:
    """Byte-count parameters of the certificate and SPDU length formulas."""

    k: int
    s1: int
    s2: int
    c: int = OVERHEAD
    u: int = 68

    def __post_init__(self) -> None:
        if min(self.k, self.s1, self.s2, self.c, self.u) < 0:
            raise ValueError("length parameters must be non-negative")


def cert_length(profile: LengthProfile) -> int:
    """``C = c + k + s1``."""
    return profile.c + profile.k + profile.s1

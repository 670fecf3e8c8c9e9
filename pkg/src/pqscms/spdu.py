"""Signed SPDUs, their length accounting and the WSM size check.

Wire layout::

    tag 1 | psid 4 | generation_time 8 | payload_len 2 | payload
    signer_tag 1 | digest 8  or  certificate
    sig_len 2 | signature

Everything outside the certificate and the signature is the ``u`` term of
the length formula; with the default 50-byte BSM payload ``u`` is 68.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import ec
from .cert import Certificate, LengthProfile, cert_length
from .ec import EcPoint
from .encoding import Reader, Writer
from .errors import DecodeError, KeyMismatch
from .pki import CertificateChainFile, CertStore, chains_to
from .provider import CryptoProvider, SchemeId, SigKeyPair

TAG_SPDU = 0x03
WSM_MAX_LEN = 1400
SPDU_FRAMING = 18  # tag + psid + time + payload_len + signer_tag + sig_len
DEFAULT_U = 68
BSM_PAYLOAD_LEN = DEFAULT_U - SPDU_FRAMING
DEFAULT_MAX_AGE_US = 500_000


class SignerMode(enum.IntEnum):
    DIGEST = 0
    FULL_CERT = 1


@dataclass(frozen=True)
class HeaderInfo:
    psid: int
    generation_time: int  # microseconds


@dataclass(frozen=True)
class SignerIdentifier:
    mode: SignerMode
    digest: bytes | None = None
    certificate: Certificate | None = None

    def __post_init__(self) -> None:
        if (self.digest is None) == (self.certificate is None):
            raise ValueError("exactly one of digest / certificate must be set")
        if self.mode is SignerMode.DIGEST and self.digest is None:
            raise ValueError("DIGEST mode needs a digest")
        if self.mode is SignerMode.FULL_CERT and self.certificate is None:
            raise ValueError("FULL_CERT mode needs a certificate")

    @property
    def cert_id(self) -> bytes:
        return self.digest if self.digest is not None else self.certificate.digest


@dataclass(frozen=True)
class Spdu:
    header: HeaderInfo
    payload: bytes
    signer: SignerIdentifier
    signature: bytes

    def tbs_bytes(self) -> bytes:
        return encode_tbs(self.header, self.payload)

    def encode(self) -> bytes:
        w = Writer().uint(TAG_SPDU, 1).raw(self.tbs_bytes()).uint(self.signer.mode, 1)
        if self.signer.mode is SignerMode.DIGEST:
            w.fixed(self.signer.digest, 8)
        else:
            w.raw(self.signer.certificate.encode())
        return w.var(self.signature).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> Spdu:
        r = Reader(data)
        r.expect(TAG_SPDU)
        header = HeaderInfo(r.uint(4), r.uint(8))
        payload = r.var()
        try:
            mode = SignerMode(r.uint(1))
        except ValueError as exc:
            raise DecodeError("unknown signer mode") from exc
        if mode is SignerMode.DIGEST:
            signer = SignerIdentifier(mode, digest=r.take(8))
        else:
            signer = SignerIdentifier(mode, certificate=Certificate.read(r))
        out = cls(header, payload, signer, r.var())
        r.done()
        return out


def encode_tbs(header: HeaderInfo, payload: bytes) -> bytes:
    return Writer().uint(header.psid, 4).uint(header.generation_time, 8).var(payload).getvalue()


class Verdict(enum.Enum):
    ACCEPT = "ACCEPT"
    UNKNOWN_SIGNER = "UNKNOWN_SIGNER"
    BAD_CHAIN = "BAD_CHAIN"
    BAD_SIGNATURE = "BAD_SIGNATURE"
    STALE = "STALE"

    @property
    def accepted(self) -> bool:
        return self is Verdict.ACCEPT


def _signing_key(auth_cert: Certificate, private_key: int | SigKeyPair) -> SigKeyPair:
    tbs = auth_cert.tbs
    if isinstance(private_key, SigKeyPair):
        if private_key.scheme != tbs.vki_scheme or private_key.public_key != tbs.vki_key:
            raise KeyMismatch("keypair does not match the certificate key")
        return private_key
    if tbs.vki_scheme is not SchemeId.ECDSA_P256:
        raise KeyMismatch("an EC scalar can only sign for an ECDSA certificate")
    if not 0 < private_key < ec.N or ec.ec_scalar_mul(private_key) != EcPoint.decode(tbs.vki_key):
        raise KeyMismatch("private key does not match the certificate key")
    return SigKeyPair(SchemeId.ECDSA_P256, tbs.vki_key, private_key.to_bytes(32, "big"))


def build_spdu(
    payload: bytes,
    auth_cert: Certificate,
    private_key: int | SigKeyPair,
    signer_mode: SignerMode,
    time_us: int,
    provider: CryptoProvider,
    psid: int | None = None,
) -> Spdu:
    """Sign ``payload``. ``private_key`` is the butterfly scalar for hybrid certs."""
    kp = _signing_key(auth_cert, private_key)
    header = HeaderInfo(auth_cert.tbs.psid if psid is None else psid, time_us)
    signature = provider.sign(kp, encode_tbs(header, payload))
    if signer_mode is SignerMode.DIGEST:
        signer = SignerIdentifier(SignerMode.DIGEST, digest=auth_cert.digest)
    else:
        signer = SignerIdentifier(SignerMode.FULL_CERT, certificate=auth_cert)
    return Spdu(header, payload, signer, signature)


def verify_spdu(
    spdu: Spdu,
    store: CertStore,
    chain: CertificateChainFile,
    now_us: int,
    max_age_us: int = DEFAULT_MAX_AGE_US,
    provider: CryptoProvider | None = None,
) -> Verdict:
    """Resolve the signer, check its chain, the signature, then freshness."""
    provider = provider or CryptoProvider()
    if spdu.signer.mode is SignerMode.FULL_CERT:
        cert = spdu.signer.certificate
    else:
        cert = store.get(spdu.signer.digest)
        if cert is None:
            return Verdict.UNKNOWN_SIGNER
    if not chains_to(cert, chain, provider):
        return Verdict.BAD_CHAIN
    tbs = cert.tbs
    if not provider.verify(tbs.vki_scheme, tbs.vki_key, spdu.tbs_bytes(), spdu.signature):
        return Verdict.BAD_SIGNATURE
    if now_us - spdu.header.generation_time > max_age_us:
        return Verdict.STALE
    return Verdict.ACCEPT


def spdu_length(profile: LengthProfile) -> int:
    """``U = u + C + s2``."""
    return profile.u + cert_length(profile) + profile.s2


def check_wsm_limit(length: int) -> bool:
    return length <= WSM_MAX_LEN

"""Anonymous authorization certificates via butterfly key expansion.

Flow between the end entity (EE), registration authority (RA) and
authorization CA (ACA)::

    EE  -> RA   EeRaCertRequest(ck, A, P_0..P_{m-1}, template, enrollment cert, sig)
    RA  -> ACA  RaAcaRequest(i, B_i = A + f1(ck, i)G, P_i, template)      per index
    ACA -> RA   sealed to P_i: AcaResponse(cert[B_i + rG], KEM(P_i, r), sig)
    RA  -> EE   RaEeCertAck(status, request id, archive digest, RA sig)
    EE  -> RA   EeRaDownloadRequest(request id, sig)
    RA  -> EE   archive of sealed responses
    EE          butterfly private key (a + f1(ck, i) + r) mod n

The RA never forwards A or ck to the ACA, and only ever sees the ACA's
responses as ciphertexts, so neither party alone can link a caterpillar
key to a butterfly key.
"""

from __future__ import annotations

import enum
import hashlib
import logging
from dataclasses import dataclass, field

from . import ec
from .cert import ZERO_ID, Certificate, TbsCertificate, issue_certificate, verify_certificate
from .ec import EcPoint
from .encoding import Reader, Writer
from .errors import (
    DecodeError,
    DecryptionFailure,
    InvalidCount,
    InvalidPoint,
    KeyMismatch,
    PolicyViolation,
    SignatureInvalid,
    ZeroKey,
)
from .pki import PSID_BSM, Entity, EntityRole
from .provider import (
    CryptoProvider,
    ExpansionKey,
    HybridCiphertext,
    KemKeyPair,
    SchemeId,
    cert_digest,
    f1_expand,
)
from .transcript import Transcript, TranscriptEntry

log = logging.getLogger(__name__)

TAG_EE_RA_REQ = 0x30
TAG_RA_ACA_REQ = 0x31
TAG_ACA_RESP = 0x32
TAG_RA_EE_ACK = 0x33
TAG_DOWNLOAD_REQ = 0x34
SCALAR_LEN = 32


@dataclass(frozen=True)
class CertTemplate:
    """The to-be-signed fields the EE asks the ACA to use (validity, PSID)."""

    validity_start: int
    validity_duration: int
    psid: int = PSID_BSM

    def encode(self) -> bytes:
        return (
            Writer().uint(self.validity_start, 4).uint(self.validity_duration, 4)
            .uint(self.psid, 4).getvalue()
        )

    @classmethod
    def read(cls, r: Reader) -> CertTemplate:
        return cls(r.uint(4), r.uint(4), r.uint(4))


@dataclass
class ButterflyState:
    """EE-side secrets for one provisioning batch."""

    ck: ExpansionKey
    a: int
    A: EcPoint
    kem_pairs: list[KemKeyPair]
    requested_count: int
    r_values: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.kem_pairs) != self.requested_count:
            raise InvalidCount("one KEM keypair per requested index")


# -- messages -----------------------------------------------------------------


@dataclass(frozen=True)
class EeRaCertRequest:
    ck: bytes
    caterpillar: bytes  # compressed A
    kem_public_keys: tuple[bytes, ...]
    template: CertTemplate
    enrollment_cert: Certificate
    signature: bytes = b""

    @property
    def count(self) -> int:
        return len(self.kem_public_keys)

    def body(self) -> bytes:
        w = (
            Writer().uint(TAG_EE_RA_REQ, 1).fixed(self.ck, 16).fixed(self.caterpillar, 33)
            .uint(len(self.kem_public_keys), 2)
        )
        for pk in self.kem_public_keys:
            w.var(pk)
        return w.raw(self.template.encode()).raw(self.enrollment_cert.encode()).getvalue()

    def encode(self) -> bytes:
        return Writer().raw(self.body()).var(self.signature, 4).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> EeRaCertRequest:
        r = Reader(data)
        r.expect(TAG_EE_RA_REQ)
        ck, cat = r.take(16), r.take(33)
        pks = tuple(r.var() for _ in range(r.uint(2)))
        out = cls(ck, cat, pks, CertTemplate.read(r), Certificate.read(r), r.var(4))
        r.done()
        return out

    def fields(self):
        out = [("ck", self.ck), ("caterpillar", self.caterpillar)]
        out += [(f"kem_public_key[{i}]", pk) for i, pk in enumerate(self.kem_public_keys)]
        out += [
            ("template", self.template.encode()),
            ("enrollment_cert", self.enrollment_cert.encode()),
            ("signature", self.signature),
        ]
        return out


@dataclass(frozen=True)
class RaAcaRequest:
    index: int
    cocoon: bytes  # compressed B_i
    kem_public_key: bytes
    template: CertTemplate
    leaked_caterpillar: bytes | None = None  # negative-control hook only

    def encode(self) -> bytes:
        w = (
            Writer().uint(TAG_RA_ACA_REQ, 1).uint(self.index, 4).fixed(self.cocoon, 33)
            .var(self.kem_public_key).raw(self.template.encode())
        )
        if self.leaked_caterpillar is None:
            w.uint(0, 1)
        else:
            w.uint(1, 1).fixed(self.leaked_caterpillar, 33)
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> RaAcaRequest:
        r = Reader(data)
        r.expect(TAG_RA_ACA_REQ)
        index, cocoon, pk = r.uint(4), r.take(33), r.var()
        tmpl = CertTemplate.read(r)
        leak = r.take(33) if r.uint(1) else None
        r.done()
        return cls(index, cocoon, pk, tmpl, leak)

    def fields(self):
        out = [
            ("index", self.index.to_bytes(4, "big")),
            ("cocoon", self.cocoon),
            ("kem_public_key", self.kem_public_key),
            ("template", self.template.encode()),
        ]
        if self.leaked_caterpillar is not None:
            out.append(("caterpillar", self.leaked_caterpillar))
        return out


@dataclass(frozen=True)
class AcaResponse:
    certificate: Certificate
    r_ciphertext: HybridCiphertext
    aca_signature: bytes

    def signed_part(self) -> bytes:
        return self.certificate.encode() + self.r_ciphertext.encode()

    def encode(self) -> bytes:
        return (
            Writer().uint(TAG_ACA_RESP, 1).raw(self.certificate.encode())
            .var(self.r_ciphertext.encode(), 4).var(self.aca_signature, 4).getvalue()
        )

    @classmethod
    def decode(cls, data: bytes) -> AcaResponse:
        r = Reader(data)
        r.expect(TAG_ACA_RESP)
        cert = Certificate.read(r)
        out = cls(cert, HybridCiphertext.decode(r.var(4)), r.var(4))
        r.done()
        return out


@dataclass(frozen=True)
class SealedResponse:
    """An :class:`AcaResponse` encrypted to the EE's per-index KEM key."""

    index: int
    ciphertext: HybridCiphertext

    def fields(self):
        return [("index", self.index.to_bytes(4, "big")), ("sealed", self.ciphertext.encode())]


class AckStatus(enum.IntEnum):
    OK = 0
    DENIED = 1


@dataclass(frozen=True)
class RaEeCertAck:
    status: AckStatus
    request_id: bytes
    archive_digest: bytes
    signature: bytes = b""

    def body(self) -> bytes:
        return (
            Writer().uint(TAG_RA_EE_ACK, 1).uint(self.status, 1).fixed(self.request_id, 8)
            .fixed(self.archive_digest, 32).getvalue()
        )

    def fields(self):
        return [
            ("status", bytes([self.status])),
            ("request_id", self.request_id),
            ("archive_digest", self.archive_digest),
            ("signature", self.signature),
        ]


@dataclass(frozen=True)
class EeRaDownloadRequest:
    request_id: bytes
    signature: bytes = b""

    def body(self) -> bytes:
        return Writer().uint(TAG_DOWNLOAD_REQ, 1).fixed(self.request_id, 8).getvalue()

    def fields(self):
        return [("request_id", self.request_id), ("signature", self.signature)]


def encode_archive(records: list[SealedResponse]) -> bytes:
    """Download container: ``u32 count`` then ``u32 index || u32 len || sealed`` per record."""
    w = Writer().uint(len(records), 4)
    for rec in records:
        w.uint(rec.index, 4).var(rec.ciphertext.encode(), 4)
    return w.getvalue()


def decode_archive(data: bytes) -> list[SealedResponse]:
    r = Reader(data)
    out = [SealedResponse(r.uint(4), HybridCiphertext.decode(r.var(4))) for _ in range(r.uint(4))]
    r.done()
    return out


# -- protocol steps -------------------------------------------------------------


def ee_init_butterfly(count: int, provider: CryptoProvider) -> ButterflyState:
    if count < 1:
        raise InvalidCount("count must be at least 1")
    ck = provider.new_expansion_key()
    a = provider.random_scalar()
    kem_pairs = [provider.generate_kem_keypair() for _ in range(count)]
    return ButterflyState(ck, a, ec.ec_scalar_mul(a), kem_pairs, count)


def ra_expand_cocoon(ck: ExpansionKey, A: EcPoint, i: int) -> EcPoint:
    """``B_i = A + f1(ck, i) * G``."""
    if A.is_identity or not ec.is_on_curve(A):
        raise InvalidPoint("caterpillar key is not a valid curve point")
    b = ec.ec_mul_add_base(f1_expand(ck, i), A)
    if b.is_identity:
        raise ZeroKey(f"cocoon key for index {i} is the identity")
    return b


def ee_cocoon_private(a: int, ck: ExpansionKey, i: int) -> int:
    """``b_i = (a + f1(ck, i)) mod n``."""
    b = ec.ec_scalar_add_mod_n(a, f1_expand(ck, i))
    if b == 0:
        raise ZeroKey(f"cocoon private key for index {i} is zero")
    return b


def aca_issue(aca: Entity, req: RaAcaRequest, provider: CryptoProvider) -> AcaResponse:
    """Randomize the cocoon key and certify ``B_i + R`` under the ACA's PQC key."""
    aca.transcript.record_fields("recv", "RaAcaRequest", req.fields())
    cocoon = EcPoint.decode(req.cocoon)
    aca_tbs = aca.certificate.tbs
    tmpl = req.template
    if (
        tmpl.validity_start < aca_tbs.validity_start
        or tmpl.validity_start + tmpl.validity_duration > aca_tbs.validity_end
    ):
        raise PolicyViolation("requested validity outside the ACA window")
    while True:
        r = provider.random_scalar()
        butterfly = ec.ec_mul_add_base(r, cocoon)
        if not butterfly.is_identity:
            break
    tbs = TbsCertificate(
        issuer_id=aca.cert_id,
        subject_id=ZERO_ID,
        validity_start=tmpl.validity_start,
        validity_duration=tmpl.validity_duration,
        psid=tmpl.psid,
        vki_scheme=SchemeId.ECDSA_P256,
        sig_scheme=aca.keypair.scheme,
        vki_key=butterfly.encode(),
    )
    cert = issue_certificate(aca.keypair, aca.cert_id, tbs, provider)
    r_ct = provider.kem_encrypt(req.kem_public_key, r.to_bytes(SCALAR_LEN, "big"))
    unsigned = AcaResponse(cert, r_ct, b"")
    resp = AcaResponse(cert, r_ct, provider.sign(aca.keypair, unsigned.signed_part()))
    aca.issued.append(cert)
    return resp


def aca_seal(
    aca: Entity, req: RaAcaRequest, resp: AcaResponse, provider: CryptoProvider
) -> SealedResponse:
    sealed = SealedResponse(req.index, provider.kem_encrypt(req.kem_public_key, resp.encode()))
    aca.transcript.record_fields("send", "AcaSealedResponse", sealed.fields())
    return sealed


def ee_open_sealed(state: ButterflyState, sealed: SealedResponse, provider: CryptoProvider) -> AcaResponse:
    if not 0 <= sealed.index < state.requested_count:
        raise DecryptionFailure(f"archive names unknown index {sealed.index}")
    plain = provider.kem_decrypt(state.kem_pairs[sealed.index], sealed.ciphertext)
    try:
        return AcaResponse.decode(plain)
    except DecodeError as exc:
        raise DecryptionFailure(f"sealed response is malformed: {exc}") from exc


def ee_finalize(
    state: ButterflyState,
    i: int,
    resp: AcaResponse,
    aca_cert: Certificate,
    provider: CryptoProvider,
    template: CertTemplate | None = None,
) -> tuple[int, Certificate]:
    """Check the ACA's response and derive the butterfly private key.

    Raises :class:`KeyMismatch` when the certified key is not
    ``(b_i + r) * G``, which is how a corrupted or malicious response shows.
    """
    aca_tbs = aca_cert.tbs
    if not provider.verify(aca_tbs.vki_scheme, aca_tbs.vki_key, resp.signed_part(), resp.aca_signature):
        raise SignatureInvalid("ACA response signature does not verify")
    cert = resp.certificate
    if not verify_certificate(cert, aca_cert, provider):
        raise SignatureInvalid("authorization certificate does not verify against the ACA")
    if cert.tbs.vki_scheme is not SchemeId.ECDSA_P256:
        raise KeyMismatch("authorization certificate must carry an ECDSA key")
    if template is not None and (
        cert.tbs.validity_start, cert.tbs.validity_duration, cert.tbs.psid
    ) != (template.validity_start, template.validity_duration, template.psid):
        raise PolicyViolation("certificate does not match the requested template")
    raw_r = provider.kem_decrypt(state.kem_pairs[i], resp.r_ciphertext)
    if len(raw_r) != SCALAR_LEN:
        raise DecryptionFailure("randomizer has the wrong length")
    r = int.from_bytes(raw_r, "big")
    if not 0 < r < ec.N:
        raise DecryptionFailure("randomizer out of range")
    priv = ec.ec_scalar_add_mod_n(ee_cocoon_private(state.a, state.ck, i), r)
    if priv == 0:
        raise ZeroKey(f"butterfly private key for index {i} is zero")
    if ec.ec_scalar_mul(priv).encode() != cert.tbs.vki_key:
        raise KeyMismatch(f"butterfly key for index {i} does not match the certificate")
    state.r_values[i] = r
    return priv, cert


# -- orchestration --------------------------------------------------------------


@dataclass(frozen=True)
class ButterflyCredential:
    index: int
    private_key: int
    certificate: Certificate


@dataclass(frozen=True)
class ProvisioningSecrets:
    """EE-side ground truth used by the unlinkability checks."""

    ck: bytes
    caterpillar: bytes
    r_values: tuple[bytes, ...]
    r_points: tuple[bytes, ...]
    butterfly_public: tuple[bytes, ...]
    butterfly_private: tuple[bytes, ...]


@dataclass
class ProvisioningResult:
    credentials: list[ButterflyCredential]
    transcripts: dict[str, Transcript]
    secrets: ProvisioningSecrets
    archive: bytes
    ack: RaEeCertAck


def _slice(t: Transcript, start: int) -> Transcript:
    return Transcript(t.owner, list(t.entries[start:]))


def run_provisioning(
    ee: Entity,
    ra: Entity,
    aca: Entity,
    count: int,
    provider: CryptoProvider,
    template: CertTemplate | None = None,
    leak_caterpillar: bool = False,
) -> ProvisioningResult:
    """Run the whole butterfly flow for ``count`` certificates.

    ``leak_caterpillar`` makes the RA forward A to the ACA; it exists only
    so tests can prove the unlinkability checks detect the leak.
    """
    if ee.certificate is None or ee.keypair is None:
        raise PolicyViolation("EE must be enrolled before requesting authorization certificates")
    marks = {e.name: len(e.transcript) for e in (ee, ra, aca)}
    aca_cert = aca.certificate
    if template is None:
        template = CertTemplate(aca_cert.tbs.validity_start, min(aca_cert.tbs.validity_duration, 7 * 86400))

    # (1)-(2) EE
    state = ee_init_butterfly(count, provider)
    unsigned = EeRaCertRequest(
        state.ck.ck, state.A.encode(), tuple(kp.public_key for kp in state.kem_pairs),
        template, ee.certificate,
    )
    req = EeRaCertRequest(**{**unsigned.__dict__, "signature": provider.sign(ee.keypair, unsigned.body())})
    ee.transcript.record_fields("send", "EeRaCertRequest", req.fields())

    # (3)-(4) RA
    ra.transcript.record_fields("recv", "EeRaCertRequest", req.fields())
    request_id = cert_digest(req.encode())
    enroll_cert = req.enrollment_cert
    eca_cert = ra.store.get(enroll_cert.tbs.issuer_id)
    if (
        eca_cert is None
        or not verify_certificate(enroll_cert, eca_cert, provider)
        or not provider.verify(enroll_cert.tbs.vki_scheme, enroll_cert.tbs.vki_key, req.body(), req.signature)
    ):
        ack = _ra_ack(ra, AckStatus.DENIED, request_id, bytes(32), provider)
        ee.transcript.record_fields("recv", "RaEeCertAck", ack.fields())
        raise SignatureInvalid("RA rejected the EeRaCertRequest")

    ck = ExpansionKey(req.ck)
    A = EcPoint.decode(req.caterpillar)
    sealed: list[SealedResponse] = []
    for i in range(req.count):
        try:
            cocoon = ra_expand_cocoon(ck, A, i)
        except ZeroKey:
            log.warning("index %d skipped: degenerate cocoon key", i)
            continue
        ra_req = RaAcaRequest(
            i, cocoon.encode(), req.kem_public_keys[i], req.template,
            leaked_caterpillar=req.caterpillar if leak_caterpillar else None,
        )
        ra.transcript.record_fields("send", "RaAcaRequest", ra_req.fields())
        # (5)-(6) ACA
        resp = aca_issue(aca, ra_req, provider)
        out = aca_seal(aca, ra_req, resp, provider)
        ra.transcript.record_fields("recv", "AcaSealedResponse", out.fields())
        sealed.append(out)

    archive = encode_archive(sealed)
    ack = _ra_ack(ra, AckStatus.OK, request_id, hashlib.sha256(archive).digest(), provider)

    # ack + download, (7)
    ee.transcript.record_fields("recv", "RaEeCertAck", ack.fields())
    ra_cert = ee.store.get(ra.cert_id)
    if ra_cert is None or not provider.verify(ra_cert.tbs.vki_scheme, ra_cert.tbs.vki_key, ack.body(), ack.signature):
        raise SignatureInvalid("RaEeCertAck signature does not verify")
    if ack.request_id != request_id:
        raise SignatureInvalid("RaEeCertAck answers a different request")
    dl_unsigned = EeRaDownloadRequest(request_id)
    dl = EeRaDownloadRequest(request_id, provider.sign(ee.keypair, dl_unsigned.body()))
    ee.transcript.record_fields("send", "EeRaDownloadRequest", dl.fields())
    ra.transcript.record_fields("recv", "EeRaDownloadRequest", dl.fields())
    if dl.request_id != request_id or not provider.verify(
        enroll_cert.tbs.vki_scheme, enroll_cert.tbs.vki_key, dl.body(), dl.signature
    ):
        raise SignatureInvalid("download request not signed by the requesting EE")
    ra.transcript.record("send", "Archive", archive)
    ee.transcript.record("recv", "Archive", archive)
    if hashlib.sha256(archive).digest() != ack.archive_digest:
        raise SignatureInvalid("archive does not match the acknowledged digest")

    # (8)-(9) EE
    credentials = []
    for rec in decode_archive(archive):
        resp = ee_open_sealed(state, rec, provider)
        priv, cert = ee_finalize(state, rec.index, resp, aca_cert, provider, template)
        credentials.append(ButterflyCredential(rec.index, priv, cert))

    secrets = ProvisioningSecrets(
        ck=state.ck.ck,
        caterpillar=state.A.encode(),
        r_values=tuple(state.r_values[c.index].to_bytes(SCALAR_LEN, "big") for c in credentials),
        r_points=tuple(ec.ec_scalar_mul(state.r_values[c.index]).encode() for c in credentials),
        butterfly_public=tuple(c.certificate.tbs.vki_key for c in credentials),
        butterfly_private=tuple(c.private_key.to_bytes(SCALAR_LEN, "big") for c in credentials),
    )
    transcripts = {
        role: _slice(e.transcript, marks[e.name])
        for role, e in (("EE", ee), ("RA", ra), ("ACA", aca))
    }
    return ProvisioningResult(credentials, transcripts, secrets, archive, ack)


def _ra_ack(ra: Entity, status: AckStatus, request_id: bytes, digest: bytes, provider) -> RaEeCertAck:
    unsigned = RaEeCertAck(status, request_id, digest)
    ack = RaEeCertAck(status, request_id, digest, provider.sign(ra.keypair, unsigned.body()))
    ra.transcript.record_fields("send", "RaEeCertAck", ack.fields())
    return ack


# -- anonymity checks ------------------------------------------------------------


@dataclass(frozen=True)
class UnlinkabilityReport:
    ra_blind_to_randomizers: bool  # (a)
    aca_blind_to_caterpillar: bool  # (b)
    no_party_sees_both_ends: bool  # (c)

    @property
    def passed(self) -> bool:
        return self.ra_blind_to_randomizers and self.aca_blind_to_caterpillar and self.no_party_sees_both_ends

    def lines(self) -> list[str]:
        return [
            f"(a) RA never sees r, R or butterfly private keys: {'PASS' if self.ra_blind_to_randomizers else 'FAIL'}",
            f"(b) ACA never sees ck or A: {'PASS' if self.aca_blind_to_caterpillar else 'FAIL'}",
            f"(c) no non-EE party sees A and a butterfly key: {'PASS' if self.no_party_sees_both_ends else 'FAIL'}",
        ]


def check_unlinkability(result: ProvisioningResult) -> UnlinkabilityReport:
    """Literal information-flow checks over the recorded transcripts.

    A value counts as seen if it equals, or occurs inside, any field the
    party sent or received.
    """
    s = result.secrets
    ra_t = result.transcripts["RA"]
    aca_t = result.transcripts["ACA"]
    forbidden_ra = s.r_values + s.r_points + s.butterfly_private
    a_ok = not any(ra_t.contains(v) for v in forbidden_ra)
    b_ok = not (aca_t.contains(s.ck) or aca_t.contains(s.caterpillar))
    c_ok = True
    for owner, t in result.transcripts.items():
        if owner == "EE":
            continue
        if t.contains(s.caterpillar) and any(t.contains(pk) for pk in s.butterfly_public):
            c_ok = False
    return UnlinkabilityReport(a_ok, b_ok, c_ok)


__all__ = [
    "AcaResponse",
    "ButterflyCredential",
    "ButterflyState",
    "CertTemplate",
    "EeRaCertRequest",
    "ProvisioningResult",
    "RaAcaRequest",
    "SealedResponse",
    "Transcript",
    "TranscriptEntry",
    "UnlinkabilityReport",
    "aca_issue",
    "check_unlinkability",
    "decode_archive",
    "ee_cocoon_private",
    "ee_finalize",
    "ee_init_butterfly",
    "encode_archive",
    "ra_expand_cocoon",
    "run_provisioning",
]

"""SCMS hierarchy, elector-signed trust list, chain file and enrollment.

Every CA and the RA hold pure-PQC certificates. Enrollment certificates
are pure-PQC too; authorization certificates (see :mod:`pqscms.butterfly`)
are hybrid.
"""

from __future__ import annotations

import enum
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .cert import (
    ZERO_ID,
    CertKind,
    Certificate,
    TbsCertificate,
    issue_certificate,
    verify_certificate,
)
from .encoding import Reader, Writer
from .errors import DecodeError, PolicyViolation
from .provider import CryptoProvider, SchemeId, SigKeyPair
from .transcript import Transcript

log = logging.getLogger(__name__)

ELECTOR_COUNT = 3
ELECTOR_QUORUM = 2
NONCE_LEN = 8

TAG_CTL = 0x10
TAG_CCF = 0x11
TAG_ENROLL_REQ = 0x20
TAG_ENROLL_RESP = 0x21

PSID_CA = 0
PSID_BSM = 0x20


class EntityRole(enum.Enum):
    RCA = "RCA"
    ICA = "ICA"
    ECA = "ECA"
    ACA = "ACA"
    RA = "RA"
    EE = "EE"


ISSUANCE_EDGES: dict[EntityRole, frozenset[EntityRole]] = {
    EntityRole.RCA: frozenset({EntityRole.RCA, EntityRole.ICA}),
    EntityRole.ICA: frozenset({EntityRole.ECA, EntityRole.ACA, EntityRole.RA}),
    EntityRole.ECA: frozenset({EntityRole.EE}),
    EntityRole.ACA: frozenset({EntityRole.EE}),
}

CA_ROLES = (EntityRole.RCA, EntityRole.ICA, EntityRole.ECA, EntityRole.ACA, EntityRole.RA)


class CertStore:
    """Trusted certificates keyed by their 8-byte digest."""

    def __init__(self, certs=()) -> None:
        self._by_id: dict[bytes, Certificate] = {}
        for cert in certs:
            self.add(cert)

    def add(self, cert: Certificate) -> bytes:
        self._by_id[cert.digest] = cert
        return cert.digest

    def get(self, digest: bytes) -> Certificate | None:
        return self._by_id.get(digest)

    def __contains__(self, digest: bytes) -> bool:
        return digest in self._by_id

    def __iter__(self):
        return iter(self._by_id.values())

    def __len__(self) -> int:
        return len(self._by_id)


@dataclass
class Entity:
    """One SCMS participant. Single-owner mutable state."""

    role: EntityRole
    name: str
    keypair: SigKeyPair | None = None
    certificate: Certificate | None = None
    store: CertStore = field(default_factory=CertStore)
    transcript: Transcript | None = None
    # ECA only: canonical id -> (scheme, canonical public key)
    registry: dict[bytes, tuple[SchemeId, bytes]] = field(default_factory=dict)
    seen_nonces: set[bytes] = field(default_factory=set)
    issued: list[Certificate] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.transcript is None:
            self.transcript = Transcript(self.name)

    @property
    def cert_id(self) -> bytes:
        if self.certificate is None:
            raise ValueError(f"{self.name} holds no certificate")
        return self.certificate.digest


@dataclass(frozen=True)
class ElectorSignature:
    scheme: SchemeId
    public_key: bytes
    signature: bytes


@dataclass(frozen=True)
class CertificateTrustList:
    root_digests: tuple[bytes, ...]
    elector_signatures: tuple[ElectorSignature, ...] = ()

    def body(self) -> bytes:
        w = Writer().uint(TAG_CTL, 1).uint(len(self.root_digests), 1)
        for d in self.root_digests:
            w.fixed(d, 8)
        return w.getvalue()

    def encode(self) -> bytes:
        w = Writer().raw(self.body()).uint(len(self.elector_signatures), 1)
        for s in self.elector_signatures:
            w.uint(s.scheme, 1).var(s.public_key).var(s.signature, 4)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> CertificateTrustList:
        r.expect(TAG_CTL)
        roots = tuple(r.take(8) for _ in range(r.uint(1)))
        sigs = []
        for _ in range(r.uint(1)):
            try:
                scheme = SchemeId(r.uint(1))
            except ValueError as exc:
                raise DecodeError("unknown elector scheme") from exc
            sigs.append(ElectorSignature(scheme, r.var(), r.var(4)))
        return cls(roots, tuple(sigs))


def sign_ctl(
    root_digests, electors: list[SigKeyPair], provider: CryptoProvider
) -> CertificateTrustList:
    unsigned = CertificateTrustList(tuple(root_digests))
    body = unsigned.body()
    sigs = tuple(
        ElectorSignature(kp.scheme, kp.public_key, provider.sign(kp, body)) for kp in electors
    )
    return CertificateTrustList(unsigned.root_digests, sigs)


def ctl_quorum_holds(
    ctl: CertificateTrustList,
    trusted_electors: set[bytes] | None = None,
    provider: CryptoProvider | None = None,
    quorum: int = ELECTOR_QUORUM,
) -> bool:
    provider = provider or CryptoProvider()
    body = ctl.body()
    good = set()
    for s in ctl.elector_signatures:
        if trusted_electors is not None and s.public_key not in trusted_electors:
            continue
        if provider.verify(s.scheme, s.public_key, body, s.signature):
            good.add(s.public_key)
    return len(good) >= quorum


@dataclass(frozen=True)
class CertificateChainFile:
    """Trust list plus CA certificates ordered RCA, ICA, ACA, ECA, RA."""

    ctl: CertificateTrustList
    certs: tuple[Certificate, ...]

    def encode(self) -> bytes:
        w = Writer().uint(TAG_CCF, 1).raw(self.ctl.encode()).uint(len(self.certs), 2)
        for cert in self.certs:
            w.raw(cert.encode())
        return w.getvalue()

    @classmethod
    def decode(cls, data: bytes) -> CertificateChainFile:
        r = Reader(data)
        r.expect(TAG_CCF)
        ctl = CertificateTrustList.read(r)
        certs = tuple(Certificate.read(r) for _ in range(r.uint(2)))
        r.done()
        return cls(ctl, certs)

    def find(self, digest: bytes) -> Certificate | None:
        for cert in self.certs:
            if cert.digest == digest:
                return cert
        return None

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.encode())

    @classmethod
    def load(cls, path: str | Path) -> CertificateChainFile:
        return cls.decode(Path(path).read_bytes())


def verify_chain(
    ccf: CertificateChainFile | bytes,
    trusted_electors: set[bytes] | None = None,
    provider: CryptoProvider | None = None,
) -> bool:
    """CTL quorum, listed root, and every link verifying against an earlier cert.

    ``ccf`` may be an encoded chain file; bytes that do not decode are
    rejected. Without ``trusted_electors`` the elector keys carried in the
    CTL are taken at face value.
    """
    provider = provider or CryptoProvider()
    try:
        if isinstance(ccf, (bytes, bytearray)):
            ccf = CertificateChainFile.decode(bytes(ccf))
        if not ctl_quorum_holds(ccf.ctl, trusted_electors, provider):
            return False
        if not ccf.certs:
            return False
        root = ccf.certs[0]
        if not root.is_self_signed or root.digest not in ccf.ctl.root_digests:
            return False
        if not verify_certificate(root, root, provider):
            return False
        seen = {root.digest: root}
        for cert in ccf.certs[1:]:
            issuer = seen.get(cert.tbs.issuer_id)
            if issuer is None or cert.digest in seen:
                return False
            if not verify_certificate(cert, issuer, provider):
                return False
            seen[cert.digest] = cert
        return True
    except Exception:  # noqa: BLE001
        return False


_chain_cache: dict[bytes, bool] = {}


def chains_to(cert: Certificate, ccf: CertificateChainFile, provider=None) -> bool:
    """True if ``cert`` is issued by a certificate inside a valid ``ccf``.

    Chain verdicts are memoized by the SHA-256 of the encoded CCF.
    """
    issuer = ccf.find(cert.tbs.issuer_id)
    if issuer is None or not verify_certificate(cert, issuer, provider):
        return False
    key = hashlib.sha256(ccf.encode()).digest()
    if key not in _chain_cache:
        _chain_cache[key] = verify_chain(ccf, provider=provider)
    return _chain_cache[key]


# -- hierarchy ----------------------------------------------------------------


@dataclass
class HierarchyConfig:
    root_scheme: SchemeId = SchemeId.FALCON512
    ica_scheme: SchemeId = SchemeId.FALCON512
    eca_scheme: SchemeId = SchemeId.FALCON512
    aca_scheme: SchemeId = SchemeId.FALCON512
    ra_scheme: SchemeId = SchemeId.FALCON512
    elector_scheme: SchemeId | None = None  # defaults to root_scheme
    hybrid_policy: bool = True
    start: int = 0
    root_duration: int = 30 * 365 * 86400
    ca_duration: int = 20 * 365 * 86400

    def scheme_for(self, role: EntityRole) -> SchemeId:
        return {
            EntityRole.RCA: self.root_scheme,
            EntityRole.ICA: self.ica_scheme,
            EntityRole.ECA: self.eca_scheme,
            EntityRole.ACA: self.aca_scheme,
            EntityRole.RA: self.ra_scheme,
        }[role]


@dataclass
class Hierarchy:
    entities: dict[EntityRole, Entity]
    ccf: CertificateChainFile
    electors: list[SigKeyPair]
    config: HierarchyConfig

    def __getitem__(self, role: EntityRole) -> Entity:
        return self.entities[role]

    @property
    def trusted_electors(self) -> set[bytes]:
        return {kp.public_key for kp in self.electors}


def issue_for(
    issuer: Entity,
    subject_role: EntityRole,
    subject_scheme: SchemeId,
    subject_key: bytes,
    start: int,
    duration: int,
    provider: CryptoProvider,
    psid: int = PSID_CA,
    subject_id: bytes | None = None,
) -> Certificate:
    """Issue a certificate along an allowed hierarchy edge."""
    if subject_role not in ISSUANCE_EDGES.get(issuer.role, frozenset()):
        raise PolicyViolation(f"{issuer.role.value} may not issue for {subject_role.value}")
    tbs = TbsCertificate(
        issuer_id=issuer.cert_id,
        subject_id=subject_id if subject_id is not None else provider.random_bytes(8),
        validity_start=start,
        validity_duration=duration,
        psid=psid,
        vki_scheme=subject_scheme,
        sig_scheme=issuer.keypair.scheme,
        vki_key=subject_key,
    )
    cert = issue_certificate(issuer.keypair, issuer.cert_id, tbs, provider)
    issuer.issued.append(cert)
    return cert


def build_hierarchy(
    config: HierarchyConfig | None = None, provider: CryptoProvider | None = None
) -> Hierarchy:
    config = config or HierarchyConfig()
    provider = provider or CryptoProvider()
    if config.hybrid_policy:
        for role in CA_ROLES:
            if config.scheme_for(role).is_classical:
                raise PolicyViolation(f"{role.value} must use a PQC scheme under hybrid policy")

    def new_entity(role: EntityRole) -> Entity:
        return Entity(role, role.value, provider.generate_signing_keypair(config.scheme_for(role)))

    rca = new_entity(EntityRole.RCA)
    root_tbs = TbsCertificate(
        issuer_id=ZERO_ID,
        subject_id=provider.random_bytes(8),
        validity_start=config.start,
        validity_duration=config.root_duration,
        psid=PSID_CA,
        vki_scheme=rca.keypair.scheme,
        sig_scheme=rca.keypair.scheme,
        vki_key=rca.keypair.public_key,
    )
    rca.certificate = issue_certificate(rca.keypair, ZERO_ID, root_tbs, provider)

    ica = new_entity(EntityRole.ICA)
    ica.certificate = issue_for(
        rca, EntityRole.ICA, ica.keypair.scheme, ica.keypair.public_key,
        config.start, config.ca_duration, provider,
    )
    entities = {EntityRole.RCA: rca, EntityRole.ICA: ica}
    for role in (EntityRole.ACA, EntityRole.ECA, EntityRole.RA):
        ent = new_entity(role)
        ent.certificate = issue_for(
            ica, role, ent.keypair.scheme, ent.keypair.public_key,
            config.start, config.ca_duration, provider,
        )
        entities[role] = ent

    elector_scheme = config.elector_scheme or config.root_scheme
    electors = [provider.generate_signing_keypair(elector_scheme) for _ in range(ELECTOR_COUNT)]
    ctl = sign_ctl([rca.certificate.digest], electors, provider)
    ccf = CertificateChainFile(
        ctl,
        tuple(entities[r].certificate for r in (
            EntityRole.RCA, EntityRole.ICA, EntityRole.ACA, EntityRole.ECA, EntityRole.RA
        )),
    )
    for ent in entities.values():
        for cert in ccf.certs:
            ent.store.add(cert)
    log.debug("built hierarchy: %s", {r.value: e.keypair.scheme.name for r, e in entities.items()})
    return Hierarchy(entities, ccf, electors, config)


# -- enrollment ---------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalIdentity:
    canonical_id: bytes
    canonical_keypair: SigKeyPair


def register_device(eca: Entity, identity: CanonicalIdentity) -> None:
    """Factory step: the ECA learns the device's canonical public key."""
    kp = identity.canonical_keypair
    eca.registry[identity.canonical_id] = (kp.scheme, kp.public_key)


@dataclass(frozen=True)
class EeEcaCertRequest:
    nonce: bytes
    canonical_id: bytes
    enrollment_scheme: SchemeId
    enrollment_public_key: bytes
    validity_start: int
    validity_duration: int
    signature: bytes = b""

    def body(self) -> bytes:
        return (
            Writer()
            .uint(TAG_ENROLL_REQ, 1)
            .fixed(self.nonce, NONCE_LEN)
            .var(self.canonical_id, 1)
            .uint(self.enrollment_scheme, 1)
            .var(self.enrollment_public_key)
            .uint(self.validity_start, 4)
            .uint(self.validity_duration, 4)
            .getvalue()
        )

    def encode(self) -> bytes:
        return Writer().raw(self.body()).var(self.signature, 4).getvalue()

    @classmethod
    def decode(cls, data: bytes) -> EeEcaCertRequest:
        r = Reader(data)
        r.expect(TAG_ENROLL_REQ)
        nonce, cid = r.take(NONCE_LEN), r.var(1)
        try:
            scheme = SchemeId(r.uint(1))
        except ValueError as exc:
            raise DecodeError("unknown enrollment scheme") from exc
        out = cls(nonce, cid, scheme, r.var(), r.uint(4), r.uint(4), r.var(4))
        r.done()
        return out

    def fields(self):
        return [
            ("nonce", self.nonce),
            ("canonical_id", self.canonical_id),
            ("enrollment_scheme", bytes([self.enrollment_scheme])),
            ("enrollment_public_key", self.enrollment_public_key),
            ("validity", self.validity_start.to_bytes(4, "big") + self.validity_duration.to_bytes(4, "big")),
            ("signature", self.signature),
        ]


class Status(enum.IntEnum):
    GRANTED = 0
    DENIED = 1


@dataclass(frozen=True)
class EcaEeCertResponse:
    status: Status
    nonce: bytes
    certificate: Certificate | None = None
    reason: str = ""

    def encode(self) -> bytes:
        cert = self.certificate.encode() if self.certificate else b""
        return (
            Writer().uint(TAG_ENROLL_RESP, 1).uint(self.status, 1)
            .fixed(self.nonce, NONCE_LEN).var(cert, 4).getvalue()
        )

    def fields(self):
        cert = self.certificate.encode() if self.certificate else b""
        return [("status", bytes([self.status])), ("nonce", self.nonce), ("certificate", cert)]


def ee_eca_cert_request(
    ee: Entity,
    identity: CanonicalIdentity,
    enrollment_keypair: SigKeyPair,
    provider: CryptoProvider,
    validity_start: int = 0,
    validity_duration: int = 5 * 365 * 86400,
) -> EeEcaCertRequest:
    if enrollment_keypair.scheme.is_classical:
        raise PolicyViolation("enrollment keys must be PQC")
    unsigned = EeEcaCertRequest(
        provider.random_bytes(NONCE_LEN),
        identity.canonical_id,
        enrollment_keypair.scheme,
        enrollment_keypair.public_key,
        validity_start,
        validity_duration,
    )
    sig = provider.sign(identity.canonical_keypair, unsigned.body())
    req = EeEcaCertRequest(**{**unsigned.__dict__, "signature": sig})
    ee.transcript.record_fields("send", "EeEcaCertRequest", req.fields())
    return req


def eca_process_request(
    eca: Entity, req: EeEcaCertRequest, provider: CryptoProvider | None = None
) -> EcaEeCertResponse:
    provider = provider or CryptoProvider()
    eca.transcript.record_fields("recv", "EeEcaCertRequest", req.fields())

    def deny(reason: str) -> EcaEeCertResponse:
        log.info("enrollment denied: %s", reason)
        resp = EcaEeCertResponse(Status.DENIED, req.nonce, None, reason)
        eca.transcript.record_fields("send", "EcaEeCertResponse", resp.fields())
        return resp

    entry = eca.registry.get(req.canonical_id)
    if entry is None:
        return deny("unknown canonical id")
    scheme, canonical_pk = entry
    if not provider.verify(scheme, canonical_pk, req.body(), req.signature):
        return deny("bad canonical signature")
    if req.nonce in eca.seen_nonces:
        return deny("replayed nonce")
    if SchemeId(req.enrollment_scheme).is_classical:
        return deny("enrollment key must be PQC")
    issuer_tbs = eca.certificate.tbs
    if (
        req.validity_start < issuer_tbs.validity_start
        or req.validity_start + req.validity_duration > issuer_tbs.validity_end
    ):
        return deny("requested validity outside the ECA window")
    eca.seen_nonces.add(req.nonce)
    try:
        cert = issue_for(
            eca, EntityRole.EE, req.enrollment_scheme, req.enrollment_public_key,
            req.validity_start, req.validity_duration, provider,
        )
    except Exception as exc:  # noqa: BLE001 - malformed key material
        return deny(f"cannot issue: {exc}")
    resp = EcaEeCertResponse(Status.GRANTED, req.nonce, cert)
    eca.transcript.record_fields("send", "EcaEeCertResponse", resp.fields())
    return resp


def new_end_entity(hierarchy: Hierarchy, name: str = "EE") -> Entity:
    ee = Entity(EntityRole.EE, name)
    for cert in hierarchy.ccf.certs:
        ee.store.add(cert)
    return ee


def enroll(
    ee: Entity,
    hierarchy: Hierarchy,
    provider: CryptoProvider,
    enrollment_scheme: SchemeId = SchemeId.FALCON512,
    canonical_scheme: SchemeId = SchemeId.FALCON512,
) -> Certificate:
    """Factory registration plus the full enrollment exchange for ``ee``."""
    eca = hierarchy[EntityRole.ECA]
    identity = CanonicalIdentity(
        provider.random_bytes(16), provider.generate_signing_keypair(canonical_scheme)
    )
    register_device(eca, identity)
    enrollment_kp = provider.generate_signing_keypair(enrollment_scheme)
    req = ee_eca_cert_request(
        ee, identity, enrollment_kp, provider,
        validity_start=eca.certificate.tbs.validity_start,
        validity_duration=eca.certificate.tbs.validity_duration,
    )
    resp = eca_process_request(eca, req, provider)
    ee.transcript.record_fields("recv", "EcaEeCertResponse", resp.fields())
    if resp.status is not Status.GRANTED:
        raise PolicyViolation(f"enrollment denied: {resp.reason}")
    cert = resp.certificate
    if cert.kind is not CertKind.PURE_PQC or not verify_certificate(cert, eca.certificate, provider):
        raise PolicyViolation("ECA returned an unusable enrollment certificate")
    ee.keypair, ee.certificate = enrollment_kp, cert
    ee.store.add(cert)
    return cert

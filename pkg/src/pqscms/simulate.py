"""Two end entities exchanging signed BSMs on a virtual clock.

Each sender signs a BSM every ``bsm_cadence_ms``; the full certificate is
attached when the receiver may not know it yet (first message, after a
certificate change) and at least every ``full_cert_cadence_ms``; otherwise
the 8-byte digest is sent. Wall-clock time is sampled only for the latency
figures.
"""

from __future__ import annotations

import configparser
import enum
import hashlib
import random
import statistics
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

from .butterfly import CertTemplate, run_provisioning
from .cert import CertKind
from .errors import ConfigError
from .pki import (
    PSID_BSM,
    CertStore,
    Entity,
    EntityRole,
    HierarchyConfig,
    build_hierarchy,
    enroll,
    issue_for,
    new_end_entity,
)
from .provider import CryptoProvider, SchemeId
from .spdu import BSM_PAYLOAD_LEN, SignerMode, Spdu, Verdict, build_spdu, check_wsm_limit, verify_spdu


class AuthMode(enum.Enum):
    PURE_ECC = "PURE_ECC"
    PURE_PQC = "PURE_PQC"
    HYBRID = "HYBRID"


def _scheme(value) -> SchemeId:
    if isinstance(value, SchemeId):
        return value
    try:
        return SchemeId[str(value).strip().upper()]
    except KeyError as exc:
        raise ConfigError(f"unknown scheme {value!r}") from exc


@dataclass
class ScenarioConfig:
    root_scheme: SchemeId = SchemeId.FALCON512
    ica_scheme: SchemeId = SchemeId.FALCON512
    eca_scheme: SchemeId = SchemeId.FALCON512
    aca_scheme: SchemeId = SchemeId.FALCON512
    ra_scheme: SchemeId = SchemeId.FALCON512
    ee_enrollment_scheme: SchemeId = SchemeId.FALCON512
    ee_auth_mode: AuthMode = AuthMode.HYBRID
    batch_size: int = 20
    bsm_cadence_ms: int = 100
    full_cert_cadence_ms: int = 450
    cert_rotation_s: int = 300
    duration_s: float = 10.0
    link_delay_ms: int = 10
    max_age_ms: int = 500
    seed: int | None = None

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name.endswith("_scheme"):
                setattr(self, f.name, _scheme(getattr(self, f.name)))
        if not isinstance(self.ee_auth_mode, AuthMode):
            try:
                self.ee_auth_mode = AuthMode(str(self.ee_auth_mode).strip().upper())
            except ValueError as exc:
                raise ConfigError(f"unknown authorization mode {self.ee_auth_mode!r}") from exc
        self.validate()

    def validate(self) -> None:
        if self.bsm_cadence_ms <= 0 or self.full_cert_cadence_ms <= 0:
            raise ConfigError("cadences must be positive")
        if self.batch_size < 1 or self.duration_s <= 0 or self.cert_rotation_s <= 0:
            raise ConfigError("batch_size, duration_s and cert_rotation_s must be positive")
        if self.link_delay_ms < 0 or self.max_age_ms < 0:
            raise ConfigError("link_delay_ms and max_age_ms must be non-negative")
        for f in fields(self):
            if f.name.endswith("_scheme") and getattr(self, f.name).is_kem:
                raise ConfigError(f"{f.name} must be a signature scheme")
        aca_ecc = self.aca_scheme.is_classical
        if self.ee_auth_mode is AuthMode.PURE_ECC and not aca_ecc:
            raise ConfigError("PURE_ECC authorization needs an ECDSA_P256 ACA")
        if self.ee_auth_mode is not AuthMode.PURE_ECC and aca_ecc:
            raise ConfigError(f"{self.ee_auth_mode.value} authorization needs a PQC ACA")
        # enrollment stays pure-PQC in every mode; only the ACA follows the mode
        for role in ("root", "ica", "eca", "ra", "ee_enrollment"):
            if getattr(self, f"{role}_scheme").is_classical:
                raise ConfigError(f"{role}_scheme must be a PQC scheme")

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> ScenarioConfig:
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if key.endswith("_scheme") or key == "ee_auth_mode":
                kwargs[key] = raw
                continue
            try:
                kwargs[key] = float(raw) if key == "duration_s" else int(raw, 0)
            except ValueError as exc:
                raise ConfigError(f"{key}: not a number: {raw!r}") from exc
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> ScenarioConfig:
        """Read a flat ``key = value`` file; ``#`` starts a comment."""
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            parser.read_string("[scenario]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        return cls.from_mapping(dict(parser["scenario"]))


@dataclass
class Vehicle:
    entity: Entity
    credentials: list  # (private key, certificate)
    payload_rng: random.Random
    receiver_store: CertStore = field(default_factory=CertStore)
    last_cert_id: bytes | None = None
    last_full_us: int | None = None


@dataclass
class SimulationSummary:
    mode: str
    aca_scheme: str
    seed: int
    messages_sent: int = 0
    messages_verified: int = 0
    verify_failures: int = 0
    failure_verdicts: dict[str, int] = field(default_factory=dict)
    full_cert_messages: int = 0
    max_full_cert_len: int = 0
    digest_msg_len: int = 0
    all_full_cert_fit_wsm: bool = True
    sign_ms: list[float] = field(default_factory=list)
    verify_ms: list[float] = field(default_factory=list)
    within_budget: int = 0
    payload_sha256: str = ""
    provisioning_s: float = 0.0

    @property
    def within_budget_fraction(self) -> float:
        return self.within_budget / self.messages_sent if self.messages_sent else 1.0

    def lines(self) -> list[str]:
        def stat(xs, fn):
            return f"{fn(xs):.4f}" if xs else "nan"

        return [
            f"mode={self.mode}",
            f"aca_scheme={self.aca_scheme}",
            f"seed={self.seed}",
            f"messages_sent={self.messages_sent}",
            f"messages_verified={self.messages_verified}",
            f"verify_failures={self.verify_failures}",
            *(f"failure[{k}]={v}" for k, v in sorted(self.failure_verdicts.items())),
            f"full_cert_messages={self.full_cert_messages}",
            f"full_cert_spdu_bytes={self.max_full_cert_len}",
            f"digest_spdu_bytes={self.digest_msg_len}",
            f"all_full_cert_fit_wsm={str(self.all_full_cert_fit_wsm).lower()}",
            f"sign_ms_median={stat(self.sign_ms, statistics.median)}",
            f"sign_ms_mean={stat(self.sign_ms, statistics.fmean)}",
            f"verify_ms_median={stat(self.verify_ms, statistics.median)}",
            f"verify_ms_mean={stat(self.verify_ms, statistics.fmean)}",
            f"within_cadence_fraction={self.within_budget_fraction:.4f}",
            f"payload_sha256={self.payload_sha256}",
            f"provisioning_s={self.provisioning_s:.3f}",
        ]

    def render(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _provision(ee: Entity, hierarchy, config: ScenarioConfig, provider: CryptoProvider) -> list:
    aca = hierarchy[EntityRole.ACA]
    tmpl = CertTemplate(aca.certificate.tbs.validity_start, 7 * 86400, PSID_BSM)
    if config.ee_auth_mode is AuthMode.PURE_PQC:
        out = []
        for _ in range(config.batch_size):
            kp = provider.generate_signing_keypair(config.aca_scheme)
            cert = issue_for(
                aca, EntityRole.EE, kp.scheme, kp.public_key, tmpl.validity_start,
                tmpl.validity_duration, provider, psid=PSID_BSM, subject_id=bytes(8),
            )
            out.append((kp, cert))
        return out
    result = run_provisioning(
        ee, hierarchy[EntityRole.RA], aca, config.batch_size, provider, template=tmpl
    )
    return [(c.private_key, c.certificate) for c in result.credentials]


def run_simulation(config: ScenarioConfig) -> SimulationSummary:
    seed = config.seed if config.seed is not None else random.SystemRandom().randrange(2**32)
    provider = CryptoProvider(seed if config.seed is not None else None)
    t0 = time.perf_counter()
    hierarchy = build_hierarchy(
        HierarchyConfig(
            root_scheme=config.root_scheme,
            ica_scheme=config.ica_scheme,
            eca_scheme=config.eca_scheme,
            aca_scheme=config.aca_scheme,
            ra_scheme=config.ra_scheme,
            hybrid_policy=config.ee_auth_mode is not AuthMode.PURE_ECC,
        ),
        provider,
    )
    vehicles = []
    for n in range(2):
        ee = new_end_entity(hierarchy, f"EE{n}")
        enroll(ee, hierarchy, provider, config.ee_enrollment_scheme, config.ee_enrollment_scheme)
        creds = _provision(ee, hierarchy, config, provider)
        vehicles.append(Vehicle(ee, creds, random.Random(f"{seed}:payload:{n}")))
    summary = SimulationSummary(config.ee_auth_mode.value, config.aca_scheme.name, seed)
    summary.provisioning_s = time.perf_counter() - t0

    start_us = vehicles[0].credentials[0][1].tbs.validity_start * 1_000_000
    cadence_us = config.bsm_cadence_ms * 1000
    full_us = config.full_cert_cadence_ms * 1000
    rotation_us = config.cert_rotation_s * 1_000_000
    end_us = start_us + int(config.duration_s * 1_000_000)
    payload_hash = hashlib.sha256()
    # the second vehicle transmits half a cadence after the first
    events = sorted(
        (t, n)
        for n in range(2)
        for t in range(start_us + n * cadence_us // 2, end_us, cadence_us)
    )
    for now_us, n in events:
        sender, receiver = vehicles[n], vehicles[1 - n]
        priv, cert = sender.credentials[((now_us - start_us) // rotation_us) % len(sender.credentials)]
        need_full = (
            cert.digest != sender.last_cert_id
            or sender.last_full_us is None
            or now_us - sender.last_full_us >= full_us
        )
        mode = SignerMode.FULL_CERT if need_full else SignerMode.DIGEST
        payload = sender.payload_rng.randbytes(BSM_PAYLOAD_LEN)
        payload_hash.update(payload)

        w0 = time.perf_counter()
        spdu = build_spdu(payload, cert, priv, mode, now_us, provider)
        w1 = time.perf_counter()
        wire = spdu.encode()
        summary.messages_sent += 1
        summary.sign_ms.append((w1 - w0) * 1e3)
        if need_full:
            sender.last_cert_id, sender.last_full_us = cert.digest, now_us
            summary.full_cert_messages += 1
            summary.max_full_cert_len = max(summary.max_full_cert_len, len(wire))
            summary.all_full_cert_fit_wsm &= check_wsm_limit(len(wire))
        else:
            summary.digest_msg_len = len(wire)

        # receiver side
        w2 = time.perf_counter()
        received = Spdu.decode(wire)
        verdict = verify_spdu(
            received, receiver.receiver_store, hierarchy.ccf,
            now_us + config.link_delay_ms * 1000, config.max_age_ms * 1000, provider,
        )
        w3 = time.perf_counter()
        summary.verify_ms.append((w3 - w2) * 1e3)
        if (w3 - w2) * 1e3 <= config.bsm_cadence_ms:
            summary.within_budget += 1
        if verdict is Verdict.ACCEPT:
            summary.messages_verified += 1
            if received.signer.mode is SignerMode.FULL_CERT:
                receiver.receiver_store.add(received.signer.certificate)
        else:
            summary.verify_failures += 1
            summary.failure_verdicts[verdict.value] = summary.failure_verdicts.get(verdict.value, 0) + 1
    summary.payload_sha256 = payload_hash.hexdigest()
    if config.ee_auth_mode is AuthMode.HYBRID:
        assert all(c.kind is CertKind.HYBRID for v in vehicles for _, c in v.credentials)
    return summary

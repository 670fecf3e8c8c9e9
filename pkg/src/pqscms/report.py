"""Certificate / SPDU length table built from scheme profiles."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

from .cert import OVERHEAD, LengthProfile, cert_length
from .provider import DEFAULT_PROFILES, SchemeId, SchemeProfile
from .spdu import DEFAULT_U, check_wsm_limit, spdu_length

# (CA scheme, EE scheme) in the order of the published comparison
TABLE1_PAIRS: tuple[tuple[SchemeId, SchemeId], ...] = (
    (SchemeId.ECDSA_P256, SchemeId.ECDSA_P256),
    (SchemeId.DILITHIUM2, SchemeId.DILITHIUM2),
    (SchemeId.FALCON512, SchemeId.FALCON512),
    (SchemeId.SPHINCS_SHA2_128F, SchemeId.SPHINCS_SHA2_128F),
    (SchemeId.DILITHIUM2, SchemeId.ECDSA_P256),
    (SchemeId.FALCON512, SchemeId.ECDSA_P256),
    (SchemeId.SPHINCS_SHA2_128F, SchemeId.ECDSA_P256),
)

COLUMNS = ("security_level", "mode", "ca_scheme", "ee_scheme", "k", "s1", "c", "C", "s2", "u", "U", "fits_wsm")


def mode_label(ca: SchemeProfile, ee: SchemeProfile) -> str:
    if ca.classical and ee.classical:
        return "pure-ECC"
    if not ca.classical and not ee.classical:
        return "pure-PQC"
    if ee.classical:
        return "hybrid"
    raise ValueError("an ECC CA over a PQC end-entity key is not a defined mode")


@dataclass(frozen=True)
class ReportRow:
    ca: SchemeProfile
    ee: SchemeProfile
    c: int = OVERHEAD
    u: int = DEFAULT_U

    @property
    def profile(self) -> LengthProfile:
        return LengthProfile(k=self.ee.pk_len, s1=self.ca.sig_len, s2=self.ee.sig_len, c=self.c, u=self.u)

    @property
    def security_level(self) -> int:
        return self.ca.security_level

    @property
    def mode(self) -> str:
        return mode_label(self.ca, self.ee)

    @property
    def C(self) -> int:  # noqa: N802
        return cert_length(self.profile)

    @property
    def U(self) -> int:  # noqa: N802
        return spdu_length(self.profile)

    @property
    def fits_wsm(self) -> bool:
        return check_wsm_limit(self.U)

    def as_dict(self) -> dict[str, object]:
        p = self.profile
        return {
            "security_level": self.security_level,
            "mode": self.mode,
            "ca_scheme": self.ca.label,
            "ee_scheme": self.ee.label,
            "k": p.k,
            "s1": p.s1,
            "c": p.c,
            "C": self.C,
            "s2": p.s2,
            "u": p.u,
            "U": self.U,
            "fits_wsm": self.fits_wsm,
        }


def length_rows(
    pairs=TABLE1_PAIRS, profiles: dict | None = None
) -> list[ReportRow]:
    """One row per (CA, EE) pair; ``profiles`` may add or override schemes."""
    table = {**DEFAULT_PROFILES, **(profiles or {})}
    return [ReportRow(table[ca], table[ee]) for ca, ee in pairs]


def render(rows: list[ReportRow], fmt: str = "csv") -> str:
    dicts = [r.as_dict() for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(dicts)
        return buf.getvalue()
    if fmt in ("md", "markdown"):
        lines = ["| " + " | ".join(COLUMNS) + " |", "|" + "---|" * len(COLUMNS)]
        lines += ["| " + " | ".join(str(d[c]) for c in COLUMNS) + " |" for d in dicts]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")

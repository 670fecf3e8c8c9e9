"""Keygen / sign / verify and KEM timing reports.

Times are wall-clock medians over ``iterations`` runs after a short
warmup. They depend on the host and are reported, never asserted.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field

from .provider import DEFAULT_PROFILES, CryptoProvider, SchemeId

SIGNATURE_SCHEMES = (
    SchemeId.ECDSA_P256,
    SchemeId.DILITHIUM2,
    SchemeId.FALCON512,
    SchemeId.SPHINCS_SHA2_128F,
)
KEM_PLAINTEXT_LEN = 32  # the ACA randomizer r
BENCH_MESSAGE = b"pqscms benchmark message"
DEFAULT_WARMUP = 3


@dataclass
class TimingRow:
    scheme: SchemeId
    columns: tuple[str, ...]
    samples: dict[str, list[float]] = field(default_factory=dict)  # seconds
    failures: int = 0

    @property
    def security_level(self) -> int:
        return DEFAULT_PROFILES[self.scheme].security_level

    @property
    def failed(self) -> bool:
        return self.failures > 0

    @property
    def op_count(self) -> int:
        return sum(len(v) for v in self.samples.values())

    def median_ms(self, col: str) -> float:
        return statistics.median(self.samples[col]) * 1e3

    def mean_ms(self, col: str) -> float:
        return statistics.fmean(self.samples[col]) * 1e3


def _time(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def bench_sign(
    iterations: int,
    provider: CryptoProvider | None = None,
    schemes=SIGNATURE_SCHEMES,
    warmup: int = DEFAULT_WARMUP,
) -> list[TimingRow]:
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    provider = provider or CryptoProvider()
    rows = []
    for scheme in schemes:
        row = TimingRow(scheme, ("keygen", "sign", "verify"), {"keygen": [], "sign": [], "verify": []})
        for it in range(warmup + iterations):
            kp, t_gen = _time(lambda: provider.generate_signing_keypair(scheme, self_test=False))
            sig, t_sign = _time(lambda: provider.sign(kp, BENCH_MESSAGE))
            ok, t_ver = _time(lambda: provider.verify(scheme, kp.public_key, BENCH_MESSAGE, sig))
            if it < warmup:
                continue
            row.failures += not ok
            row.samples["keygen"].append(t_gen)
            row.samples["sign"].append(t_sign)
            row.samples["verify"].append(t_ver)
        rows.append(row)
    return rows


def bench_kem(
    iterations: int, provider: CryptoProvider | None = None, warmup: int = DEFAULT_WARMUP
) -> list[TimingRow]:
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    provider = provider or CryptoProvider()
    row = TimingRow(SchemeId.KYBER512, ("keygen", "encrypt", "decrypt"), {"keygen": [], "encrypt": [], "decrypt": []})
    for it in range(warmup + iterations):
        plaintext = provider.random_bytes(KEM_PLAINTEXT_LEN)
        kp, t_gen = _time(provider.generate_kem_keypair)
        ct, t_enc = _time(lambda: provider.kem_encrypt(kp.public_key, plaintext))
        try:
            out, t_dec = _time(lambda: provider.kem_decrypt(kp, ct))
        except Exception:  # noqa: BLE001 - a failed round trip marks the row
            out, t_dec = None, 0.0
        if it < warmup:
            continue
        row.failures += out != plaintext
        row.samples["keygen"].append(t_gen)
        row.samples["encrypt"].append(t_enc)
        row.samples["decrypt"].append(t_dec)
    return [row]


def render_timings(rows: list[TimingRow], fmt: str = "csv") -> str:
    """One line per scheme: median and mean in ms per column, plus status."""
    cols = rows[0].columns
    header = ["scheme", "security_level"]
    for c in cols:
        header += [f"{c}_median_ms", f"{c}_mean_ms"]
    header += ["iterations", "status"]
    body = []
    for r in rows:
        line = [r.scheme.label, r.security_level]
        for c in cols:
            line += [f"{r.median_ms(c):.4f}", f"{r.mean_ms(c):.4f}"]
        line += [len(r.samples[cols[0]]), "FAILED" if r.failed else "ok"]
        body.append(line)
    if fmt in ("md", "markdown"):
        out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
        out += ["| " + " | ".join(map(str, b)) + " |" for b in body]
        return "\n".join(out) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(body)
    return buf.getvalue()

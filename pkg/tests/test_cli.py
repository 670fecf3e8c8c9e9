import csv
import io
from pathlib import Path

import pytest

from pqscms.bench import bench_kem, bench_sign, render_timings
from pqscms.cli import EXIT_CONFIG_ERROR, EXIT_OK, EXIT_VERIFY_FAILURE, main
from pqscms.errors import ConfigError
from pqscms.provider import CryptoProvider, SchemeId, SchemeProfile
from pqscms.report import TABLE1_PAIRS, length_rows, mode_label, render
from pqscms.simulate import AuthMode, ScenarioConfig, run_simulation

GOLDEN = Path(__file__).parent / "data" / "table1.csv"
NUMERIC = ("security_level", "k", "s1", "c", "C", "s2", "u", "U")


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_table_lengths_matches_golden_file(capsys):
    assert main(["table-lengths"]) == EXIT_OK
    got = _rows(capsys.readouterr().out)
    want = _rows(GOLDEN.read_text())
    assert len(got) == 7
    for g, w in zip(got, want):
        assert {k: g[k] for k in NUMERIC} == {k: w[k] for k in NUMERIC}
        assert (g["mode"], g["fits_wsm"]) == (w["mode"], w["fits_wsm"])


def test_table_lengths_markdown_and_out_file(tmp_path):
    out = tmp_path / "t.md"
    assert main(["table-lengths", "--format", "md", "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("| security_level")
    assert len(lines) == 9
    assert "| 733 |" in lines[7] and "| 866 |" in lines[7]
    top = tmp_path / "t.csv"
    assert main(["--out", str(top), "table-lengths"]) == EXIT_OK
    assert top.read_text().count("\n") == 8


def test_row_values_recomputed_from_profiles():
    rows = {(r.ca.scheme, r.ee.scheme): r for r in length_rows()}
    hybrid_falcon = rows[(SchemeId.FALCON512, SchemeId.ECDSA_P256)]
    assert (hybrid_falcon.C, hybrid_falcon.U, hybrid_falcon.fits_wsm) == (733, 866, True)
    sphincs = rows[(SchemeId.SPHINCS_SHA2_128F, SchemeId.SPHINCS_SHA2_128F)]
    assert (sphincs.C, sphincs.U, sphincs.fits_wsm) == (16787, 33575, False)
    assert rows[(SchemeId.DILITHIUM2, SchemeId.DILITHIUM2)].U == 6254


def test_pluggable_profiles():
    bigger = {SchemeId.FALCON512: SchemeProfile(SchemeId.FALCON512, 5, 1793, 1280)}
    row = length_rows([(SchemeId.FALCON512, SchemeId.ECDSA_P256)], bigger)[0]
    assert (row.security_level, row.C, row.U) == (5, 34 + 33 + 1280, 68 + 34 + 33 + 1280 + 65)
    with pytest.raises(ValueError):
        mode_label(length_rows()[0].ca, length_rows()[1].ca)
    with pytest.raises(ValueError):
        render(length_rows(), "xml")
    assert len(TABLE1_PAIRS) == 7


def test_bench_sign_shape():
    rows = bench_sign(3, warmup=1)
    assert [r.scheme for r in rows] == [SchemeId.ECDSA_P256, SchemeId.DILITHIUM2, SchemeId.FALCON512, SchemeId.SPHINCS_SHA2_128F]
    for r in rows:
        assert not r.failed
        assert r.op_count == 9
        assert all(r.median_ms(c) > 0 and r.mean_ms(c) > 0 for c in r.columns)
    table = _rows(render_timings(rows))
    assert [int(t["security_level"]) for t in table] == [0, 2, 1, 1]
    assert {t["status"] for t in table} == {"ok"}


def test_bench_op_counts_repeat():
    assert [r.op_count for r in bench_kem(4, warmup=0)] == [r.op_count for r in bench_kem(4, warmup=0)]


class _BrokenKem(CryptoProvider):
    def kem_decrypt(self, kp, ct):
        return b"wrong"


def test_bench_kem_marks_failed_rows():
    row = bench_kem(2, _BrokenKem(), warmup=0)[0]
    assert row.failed
    assert "FAILED" in render_timings([row])
    ok = bench_kem(2, warmup=0)[0]
    assert not ok.failed and ok.columns == ("keygen", "encrypt", "decrypt")


def test_bench_cli(capsys):
    assert main(["bench-kem", "--iters", "2"]) == EXIT_OK
    table = _rows(capsys.readouterr().out)
    assert len(table) == 1 and table[0]["scheme"] == "Kyber-512"
    with pytest.raises(SystemExit) as exc:
        main(["bench-sign", "--iters", "0"])
    assert exc.value.code == EXIT_CONFIG_ERROR


def test_simulate_default_config(capsys):
    assert main(["simulate", "--seed", "3"]) == EXIT_OK
    out = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines())
    assert out["verify_failures"] == "0"
    assert out["all_full_cert_fit_wsm"] == "true"
    assert out["full_cert_spdu_bytes"] == "866"
    assert int(out["messages_sent"]) == int(out["messages_verified"]) == 200


def test_simulate_dilithium_does_not_fit(tmp_path, capsys):
    cfg = tmp_path / "dil.cfg"
    cfg.write_text("# Dilithium-signed hybrid certificates\naca_scheme = DILITHIUM2\nduration_s = 2\n")
    assert main(["simulate", "--config", str(cfg), "--seed", "1"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "all_full_cert_fit_wsm=false" in out
    assert "full_cert_spdu_bytes=2620" in out
    assert "verify_failures=0" in out


def test_simulate_same_seed_same_stream():
    a = run_simulation(ScenarioConfig(duration_s=2, batch_size=3, seed=99))
    b = run_simulation(ScenarioConfig(duration_s=2, batch_size=3, seed=99))
    c = run_simulation(ScenarioConfig(duration_s=2, batch_size=3, seed=98))
    assert (a.messages_sent, a.full_cert_messages, a.payload_sha256) == (b.messages_sent, b.full_cert_messages, b.payload_sha256)
    assert a.payload_sha256 != c.payload_sha256


@pytest.mark.parametrize(
    "mode,aca,size",
    [(AuthMode.PURE_ECC, SchemeId.ECDSA_P256, 265), (AuthMode.PURE_PQC, SchemeId.FALCON512, None)],
)
def test_simulate_other_modes(mode, aca, size):
    s = run_simulation(ScenarioConfig(ee_auth_mode=mode, aca_scheme=aca, duration_s=1, batch_size=2, seed=4))
    assert s.verify_failures == 0 and s.messages_verified == s.messages_sent == 20
    if size is not None:
        assert s.max_full_cert_len == size
    else:
        assert not s.all_full_cert_fit_wsm


def test_certificate_rotation_resends_full_cert():
    s = run_simulation(ScenarioConfig(duration_s=3, cert_rotation_s=1, full_cert_cadence_ms=10_000, batch_size=3, seed=2))
    assert s.verify_failures == 0
    assert s.full_cert_messages == 6  # one per vehicle per certificate


def test_stale_link_is_a_verification_failure(tmp_path, capsys):
    cfg = tmp_path / "slow.cfg"
    cfg.write_text("link_delay_ms = 900\nduration_s = 1\nbatch_size = 1\n")
    assert main(["simulate", "--config", str(cfg)]) == EXIT_VERIFY_FAILURE
    out = dict(line.split("=", 1) for line in capsys.readouterr().out.splitlines())
    assert out["verify_failures"] == "20"
    # stale full-cert messages are never learned, so later digests stay unknown
    assert int(out["failure[STALE]"]) + int(out["failure[UNKNOWN_SIGNER]"]) == 20
    assert int(out["failure[STALE]"]) >= 4


@pytest.mark.parametrize(
    "text",
    [
        "bogus = 1\n",
        "bsm_cadence_ms = 0\n",
        "batch_size = many\n",
        "aca_scheme = RSA\n",
        "aca_scheme = KYBER512\n",
        "ee_auth_mode = PURE_ECC\n",
        "ee_auth_mode = HYBRID\naca_scheme = ECDSA_P256\n",
        "root_scheme = ECDSA_P256\n",
        "ee_auth_mode = QUANTUM\n",
        "no equals sign here\n",
    ],
)
def test_config_errors_exit_2(tmp_path, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    with pytest.raises(ConfigError):
        ScenarioConfig.load(cfg)
    assert main(["simulate", "--config", str(cfg)]) == EXIT_CONFIG_ERROR


def test_missing_config_and_unknown_command():
    assert main(["simulate", "--config", "/nonexistent/x.cfg"]) == EXIT_CONFIG_ERROR
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_CONFIG_ERROR


def test_console_script_entry_point():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-m", "pqscms.cli", "table-lengths"], capture_output=True, text=True)
    assert out.returncode == 0
    assert out.stdout.splitlines()[6].endswith(",733,65,68,866,True")

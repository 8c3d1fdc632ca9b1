import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cspath.cli import main
from cspath.scenario import parse_csv, read_csv

ROOT = Path(__file__).resolve().parents[1]
SC = ROOT / "scenarios"
GOLDEN = Path(__file__).parent / "golden"


def run(*args):
    return main([str(a) for a in args])


def test_amplitude_free_mode(tmp_path, capsys):
    assert run("amplitude", "--scenario", SC / "free_mode.toml", "--out", tmp_path) == 0
    rows = {r["quantity"]: complex(r["re"], r["im"]) for r in read_csv(tmp_path / "free_mode_amplitude.csv", "amplitude")}
    assert "free_mode" in capsys.readouterr().out
    assert abs(rows["symplectic_defect"]) < 1e-12
    v, w = 0.4 + 0.2j, 0.7 - 0.1j
    assert rows["amplitude"] == pytest.approx(np.exp(v * w * np.exp(-1.3j)), rel=1e-12)


def test_amplitude_matches_golden(tmp_path):
    assert run("amplitude", "--scenario", SC / "squeeze.toml", "--out", tmp_path) == 0
    got = read_csv(tmp_path / "squeeze_amplitude.csv", "amplitude")
    ref = read_csv(GOLDEN / "squeeze_amplitude.csv", "amplitude")
    assert [r["quantity"] for r in got] == [r["quantity"] for r in ref]
    for g, r in zip(got, ref):
        if g["quantity"] == "symplectic_defect":
            assert g["re"] < 1e-12
            continue
        assert complex(g["re"], g["im"]) == pytest.approx(complex(r["re"], r["im"]), abs=1e-12)
    assert got[1]["re"] == pytest.approx(1 / np.sqrt(np.cosh(0.6)), abs=1e-12)


def test_invalid_input_exit_code(tmp_path, capsys):
    assert run("amplitude", "--scenario", SC / "bad_b.toml", "--out", tmp_path) == 3
    err = capsys.readouterr().err
    assert "B = B^T" in err
    assert not list(tmp_path.glob("*.csv"))


def test_verify_free_mode(tmp_path):
    assert run("verify", "--scenario", SC / "free_mode.toml", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "free_mode_verify.csv", "verify")
    assert all(r["passed"] for r in rows)
    assert all(r["residual"] < 1e-10 for r in rows)


def test_verify_random_scenario(tmp_path):
    assert run("verify", "--scenario", SC / "random2.toml", "--out", tmp_path) == 0


def test_verify_reports_failures(tmp_path, capsys):
    assert run("verify", "--scenario", SC / "coarse_verify.toml", "--out", tmp_path) == 1
    assert "FAIL" in capsys.readouterr().out
    rows = read_csv(tmp_path / "coarse_verify_verify.csv", "verify")
    assert not all(r["passed"] for r in rows)


def test_compare(tmp_path):
    assert run("compare", "--scenario", SC / "squeeze.toml", "--out", tmp_path) == 0
    (row,) = read_csv(tmp_path / "squeeze_compare.csv", "compare")
    assert row["fock_discrepancy"] < 1e-5 and row["extrapolated_discrepancy"] < 1e-5


def test_scan(tmp_path, capsys):
    assert run("scan", "--scenario", SC / "families" / "convergent.toml", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "convergent_scan.csv", "scan")
    assert rows[-1]["verdict"] == "convergent"
    assert "implementability convergent" in capsys.readouterr().out


def test_scan_rejects_family_without_table(tmp_path):
    assert run("scan", "--scenario", SC / "families" / "empty.toml", "--out", tmp_path) == 2


def test_output_is_byte_identical_across_runs(tmp_path):
    for d in ("a", "b"):
        assert run("amplitude", "--scenario", SC / "random2.toml", "--out", tmp_path / d) == 0
        assert run("scan", "--scenario", SC / "families" / "divergent.toml", "--out", tmp_path / d) == 0
    for name in ("random2_amplitude.csv", "divergent_scan.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_parallel_jobs_match_serial(tmp_path):
    files = [SC / "squeeze.toml", SC / "free_mode.toml", SC / "random2.toml"]
    args = [x for f in files for x in ("--scenario", f)]
    assert run("amplitude", *args, "--out", tmp_path / "s") == 0
    assert run("amplitude", *args, "--jobs", "2", "--out", tmp_path / "p") == 0
    for f in files:
        name = f"{f.stem}_amplitude.csv"
        assert (tmp_path / "s" / name).read_bytes() == (tmp_path / "p" / name).read_bytes()


def test_worst_exit_code_wins(tmp_path):
    assert run("amplitude", "--scenario", SC / "squeeze.toml", "--scenario", SC / "bad_b.toml",
               "--out", tmp_path) == 3
    assert (tmp_path / "squeeze_amplitude.csv").exists()


def test_evolve_dump(tmp_path):
    assert run("evolve-dump", "--scenario", SC / "squeeze.toml", "--steps", "8", "--out", tmp_path) == 0
    lines = (tmp_path / "squeeze_evolve_dump.csv").read_text().splitlines()
    assert len(lines) == 10
    last = dict(zip(lines[0].split(","), map(float, lines[-1].split(","))))
    assert last["alpha_00_re"] == pytest.approx(np.cosh(0.6), abs=1e-6)


def test_overrides_change_the_result(tmp_path):
    assert run("amplitude", "--scenario", SC / "squeeze.toml", "--lambda", "0", "--out", tmp_path) == 0
    rows = read_csv(tmp_path / "squeeze_amplitude.csv", "amplitude")
    assert rows[1]["re"] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("extra", [["--jobs", "0"], ["--steps", "0"], ["--lambda", "1.5"]])
def test_usage_errors(tmp_path, extra):
    assert run("amplitude", "--scenario", SC / "squeeze.toml", "--out", tmp_path, *extra) == 2


def test_missing_subcommand():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "cspath", "amplitude", "--scenario", str(SC / "free_mode.toml"),
                          "--out", str(tmp_path)], capture_output=True, text=True, env=dict(os.environ))
    assert res.returncode == 0, res.stderr
    text = (tmp_path / "free_mode_amplitude.csv").read_text()
    assert parse_csv(text, "amplitude")[0]["quantity"] == "log_amplitude"

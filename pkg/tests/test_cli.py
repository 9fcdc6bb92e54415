import csv
import json
import logging
from pathlib import Path
from typing import Any, List

import pytest

from kinetic_spectral import cli
from kinetic_spectral.analysis.certify import CertificationReport
from kinetic_spectral.errors import NumericBlowup

SMALL = ["--s", "2", "--n-modes", "12", "--t-max", "5", "--t-steps", "21"]


@pytest.fixture
def workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("KINETIC_SPECTRAL_CACHE", str(tmp_path / "cache"))
    return tmp_path


def run_main(command: str, out: Path, *extra: str) -> int:
    return cli.main([command, *SMALL, "--out", str(out), *extra])


def read_rows(path: Path) -> List[List[str]]:
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_truncation_below_two_is_a_config_error(workdir: Path) -> None:
    assert cli.main(["solve", "--n-modes", "1", "--out", str(workdir / "out")]) == cli.EXIT_CONFIG


def test_malformed_init_is_a_config_error(workdir: Path) -> None:
    assert run_main("solve", workdir / "out", "--init", "gaussian:1") == cli.EXIT_CONFIG


def test_large_data_needs_explicit_flag(workdir: Path) -> None:
    out = workdir / "out"

    assert run_main("solve", out, "--init", "single_mode:2:0.5") == cli.EXIT_CONFIG
    assert run_main("solve", out, "--init", "single_mode:2:0.5", "--allow-large-data") == cli.EXIT_OK


def test_large_file_data_needs_explicit_flag(workdir: Path) -> None:
    path = workdir / "g0.json"
    path.write_text(json.dumps({"coefficients": [0.0, 0.0, 0.5]}))

    assert run_main("solve", workdir / "out", "--init", f"file:{path}") == cli.EXIT_CONFIG


def test_spectrum_is_deterministic(workdir: Path, caplog: pytest.LogCaptureFixture) -> None:
    caplog.set_level(logging.INFO, logger="kinetic_spectral")
    first, second = workdir / "first", workdir / "second"

    assert run_main("spectrum", first) == cli.EXIT_OK
    assert run_main("spectrum", second) == cli.EXIT_OK

    assert (first / "spectrum.csv").read_bytes() == (second / "spectrum.csv").read_bytes()
    rows = read_rows(first / "spectrum.csv")
    assert rows[0] == ["n", "lambda", "asymptote_ratio", "convolution_sum_ratio"]
    assert len(rows) == 14
    assert rows[1][1] == "0" and rows[1][2] == ""
    assert "cache hit" in caplog.text


def test_solve_writes_trajectory_and_expsum(workdir: Path) -> None:
    out = workdir / "out"

    assert run_main("solve", out, "--init", "single_mode:2:0.05") == cli.EXIT_OK

    rows = read_rows(out / "trajectory.csv")
    assert rows[0] == ["t"] + [f"g_{n}" for n in range(13)]
    assert len(rows) == 22
    assert float(rows[1][3]) == 0.05
    assert json.loads((out / "expsum.json").read_text())["N"] == 12


@pytest.mark.parametrize("method", ["expsum", "adaptive_numeric"])
def test_solve_tiny_data(workdir: Path, method: str) -> None:
    out = workdir / "out"

    assert run_main("solve", out, "--init", "single_mode:2:1e-200", "--method", method) == cli.EXIT_OK

    rows = read_rows(out / "trajectory.csv")
    assert float(rows[1][3]) == 1e-200
    assert 0.0 < float(rows[-1][3]) < 1e-200


def test_numeric_solve_skips_expsum(workdir: Path) -> None:
    out = workdir / "out"

    assert run_main("solve", out, "--method", "adaptive_numeric") == cli.EXIT_OK

    assert (out / "trajectory.csv").exists()
    assert not (out / "expsum.json").exists()


def test_norms(workdir: Path) -> None:
    out = workdir / "out"

    assert run_main("norms", out) == cli.EXIT_OK

    rows = read_rows(out / "norms.csv")
    assert rows[0] == ["t", "l2", "shubin_1", "shubin_2", "shubin_4", "shubin_8", "logexp"]
    assert len(rows) == 22
    # Shubin norms grow with the order at every time
    for row in rows[1:]:
        values = [float(v) for v in row[2:6]]
        assert values == sorted(values)


def test_config_file_with_flag_override(workdir: Path) -> None:
    config = workdir / "run.json"
    config.write_text(json.dumps({"s": 1.0, "N": 8, "t_steps": 5, "initial_data": {"kind": "single_mode", "n": 2, "a": 0.01}}))
    out = workdir / "out"

    assert cli.main(["solve", "--config", str(config), "--n-modes", "10", "--out", str(out)]) == cli.EXIT_OK

    rows = read_rows(out / "trajectory.csv")
    assert len(rows[0]) == 12
    assert len(rows) == 6


def test_verify_single_mode(workdir: Path) -> None:
    out = workdir / "out"

    assert run_main("verify", out, "--init", "single_mode:2:0.05") == cli.EXIT_OK

    report = json.loads((out / "verify_report.json").read_text())
    assert report["s"] == 2.0 and report["N"] == 12
    assert all(r["pass"] for r in report["reports"])
    assert {r["check"] for r in report["reports"]} == {
        "spectral_table",
        "eigen_identity",
        "energy_inequality",
        "monotone_decay",
        "rates",
        "weight_chain",
        "young_inequality",
    }
    assert "cs_hat" not in report["fitted_constants"]
    assert report["fitted_constants"]["epsilon0_hat"] > 0.0


def test_verify_failure_exits_with_certification_code(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def failing(*args: Any, **kwargs: Any) -> CertificationReport:
        return CertificationReport(check="young_inequality", passed=False, worst_margin=-1.0, message="forced")

    monkeypatch.setattr(cli, "young_sample_check", failing)
    out = workdir / "out"

    assert run_main("verify", out, "--init", "single_mode:2:0.05") == cli.EXIT_CERTIFICATION
    report = json.loads((out / "verify_report.json").read_text())
    assert not report["reports"][-1]["pass"]


def test_blowup_exits_with_numeric_code(workdir: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    def blowing_up(*args: Any, **kwargs: Any) -> None:
        raise NumericBlowup("guard exceeded")

    monkeypatch.setattr(cli, "solve_triangular", blowing_up)

    assert run_main("solve", workdir / "out") == cli.EXIT_NUMERIC


@pytest.mark.slow
def test_verify_acceptance_run(workdir: Path) -> None:
    out = workdir / "out"

    code = cli.main(
        ["verify", "--s", "2", "--n-modes", "32", "--init", "single_mode:2:0.05", "--out", str(out)]
    )

    assert code == cli.EXIT_OK
    assert all(r["pass"] for r in json.loads((out / "verify_report.json").read_text())["reports"])

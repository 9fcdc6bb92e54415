import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from kinetic_spectral.config import (
    FileInit,
    RandomDecayInit,
    RunConfig,
    SingleModeInit,
    SpectralSettings,
    parse_initial_data,
)
from kinetic_spectral.errors import ConfigError
from kinetic_spectral.galerkin import SolverMethod


def test_settings_ignore_unrelated_env_keys(tmp_path: Path) -> None:
    env_file = tmp_path / ".env"
    env_file.write_text(
        "\n".join(
            [
                f"KINETIC_SPECTRAL_CACHE={tmp_path / 'tables'}",
                "KINETIC_SPECTRAL_RK_TOL=1e-12",
                "KINETIC_SPECTRAL_WORKERS=4",
                "MONGODB_URI=should-be-ignored",
                "FEISHU_APP_ID=should-also-be-ignored",
            ]
        )
        + "\n"
    )

    settings = SpectralSettings(_env_file=env_file)

    assert settings.kinetic_spectral_cache == tmp_path / "tables"
    assert settings.kinetic_spectral_rk_tol == 1e-12
    assert settings.kinetic_spectral_workers == 4
    assert settings.kinetic_spectral_term_cap == 100_000


def test_settings_normalize_log_level(tmp_path: Path) -> None:
    env_file = tmp_path / ".env"
    env_file.write_text("KINETIC_SPECTRAL_LOG_LEVEL=debug\n")

    assert SpectralSettings(_env_file=env_file).kinetic_spectral_log_level == "DEBUG"


def test_settings_reject_unknown_log_level(tmp_path: Path) -> None:
    env_file = tmp_path / ".env"
    env_file.write_text("KINETIC_SPECTRAL_LOG_LEVEL=chatty\n")

    with pytest.raises(ValidationError):
        SpectralSettings(_env_file=env_file)


def test_settings_reject_nonpositive_tolerances(tmp_path: Path) -> None:
    env_file = tmp_path / ".env"
    env_file.write_text("KINETIC_SPECTRAL_RESONANCE_TOL=0\n")

    with pytest.raises(ValidationError):
        SpectralSettings(_env_file=env_file)


def test_run_config_defaults() -> None:
    config = RunConfig()

    assert config.s == 1.0
    assert config.N == 64
    assert config.method is SolverMethod.EXPSUM
    assert isinstance(config.initial_data, RandomDecayInit)
    assert config.t_grid[0] == 0.0
    assert config.t_grid[-1] == config.t_max
    assert config.t_grid.size == config.t_steps


@pytest.mark.parametrize(
    "overrides",
    [{"N": 1}, {"s": 0.0}, {"s": 2.5}, {"tol": 0.0}, {"t_steps": 1}, {"shubin_taus": [-1.0]}],
)
def test_run_config_rejects_out_of_range_values(overrides: dict) -> None:
    with pytest.raises(ValidationError):
        RunConfig(**overrides)


def test_run_config_rejects_single_mode_beyond_truncation() -> None:
    with pytest.raises(ValidationError):
        RunConfig(N=8, initial_data=SingleModeInit(n=9, a=0.01))


def test_run_config_small_data_guard() -> None:
    with pytest.raises(ValidationError):
        RunConfig(initial_data=SingleModeInit(n=2, a=0.5))

    config = RunConfig(initial_data=SingleModeInit(n=2, a=0.5), allow_large_data=True)
    assert config.initial_data.norm == 0.5


def test_parse_initial_data_variants() -> None:
    assert parse_initial_data("single_mode:2:0.05") == SingleModeInit(n=2, a=0.05)
    assert parse_initial_data("random_decay:0.05") == RandomDecayInit(norm=0.05)
    assert parse_initial_data("random_decay:0.05:3") == RandomDecayInit(
        norm=0.05, decay_exponent=3.0
    )
    assert parse_initial_data("file:data/g0.json") == FileInit(path=Path("data/g0.json"))


@pytest.mark.parametrize(
    "text", ["", "single_mode:2", "single_mode:two:0.1", "random_decay:", "gaussian:1", "file:"]
)
def test_parse_initial_data_rejects_malformed(text: str) -> None:
    with pytest.raises(ConfigError):
        parse_initial_data(text)


def test_run_config_from_json(tmp_path: Path) -> None:
    path = tmp_path / "run.json"
    path.write_text(
        json.dumps(
            {
                "s": 2.0,
                "N": 16,
                "method": "adaptive_numeric",
                "initial_data": {"kind": "single_mode", "n": 3, "a": 0.02},
            }
        )
    )

    config = RunConfig.from_json(path)

    assert config.s == 2.0
    assert config.N == 16
    assert config.method is SolverMethod.ADAPTIVE_NUMERIC
    assert config.initial_data == SingleModeInit(n=3, a=0.02)


def test_run_config_from_json_reports_unreadable_files(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        RunConfig.from_json(tmp_path / "missing.json")

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        RunConfig.from_json(broken)

    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.from_json(listed)

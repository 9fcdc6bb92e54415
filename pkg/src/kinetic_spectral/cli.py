"""kinetic-spectral 命令行入口."""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError
from scipy import linalg

from .analysis.certify import (
    CertificationReport,
    certify_eigen_identity,
    certify_energy_inequality,
    certify_monotone_decay,
    certify_rates,
    certify_table,
    certify_weight_chain,
    fit_c0,
    fit_cs,
    young_sample_check,
)
from .analysis.probes import energy_constant_probe, trilinear_constant_probe
from .analysis.weights import LogExpWeight, ShubinWeight, log_weighted_norm_coeffs
from .cache import SpectralCache
from .config import (
    FileInit,
    RandomDecayInit,
    RunConfig,
    SingleModeInit,
    SpectralSettings,
    get_settings,
    parse_initial_data,
)
from .errors import (
    NUMERIC_FAILURES,
    CertificationFailure,
    ConfigError,
    DomainError,
    InvalidInitialData,
    InvariantViolation,
    TruncationMismatch,
)
from .galerkin import (
    ModeVector,
    SolverMethod,
    Trajectory,
    load_initial_data,
    random_initial_data,
    single_mode,
    solve_triangular,
    write_expsum_json,
    write_trajectory_csv,
)
from .kernel import CollisionKernel
from .spectrum import SpectralTable, asymptote_ratio, convolution_sum_ratio

logger = logging.getLogger(__name__)

COMMANDS = ("spectrum", "solve", "norms", "verify")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CERTIFICATION = 3
EXIT_NUMERIC = 4


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def build_parser() -> argparse.ArgumentParser:
    """构建参数解析器."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    common.add_argument("--s", type=float, help="Debye-Yukawa exponent in (0, 2]")
    common.add_argument("--n-modes", dest="N", type=int, help="truncation order N >= 2")
    common.add_argument("--tol", type=float, help="quadrature tolerance")
    common.add_argument("--t-max", dest="t_max", type=float, help="final time")
    common.add_argument("--t-steps", dest="t_steps", type=int, help="number of grid times")
    common.add_argument("--method", choices=[m.value for m in SolverMethod], help="cascade solver")
    common.add_argument("--seed", type=int, help="seed for random initial data")
    common.add_argument(
        "--init",
        dest="initial_data",
        help="single_mode:n:a | random_decay:norm[:decay] | file:path",
    )
    common.add_argument("--out", dest="output_dir", type=Path, help="output directory")
    common.add_argument(
        "--allow-large-data",
        dest="allow_large_data",
        action="store_true",
        default=None,
        help="accept initial data above the small-data guard",
    )

    parser = argparse.ArgumentParser(
        prog="kinetic-spectral",
        description="Spectral Galerkin solver and certification suite for the "
        "radially symmetric Boltzmann equation with Debye-Yukawa potential.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common], help="tabulate eigenvalues and couplings")
    sub.add_parser("solve", parents=[common], help="solve the cascade and export the trajectory")
    sub.add_parser("norms", parents=[common], help="weighted norms along the trajectory")
    sub.add_parser("verify", parents=[common], help="run the certification suite")
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the --config file and command-line flags."""
    data: Dict[str, Any] = {}
    if args.config is not None:
        data = RunConfig.from_json(args.config).model_dump()
    for field in ("s", "N", "tol", "t_max", "t_steps", "method", "seed", "output_dir", "allow_large_data"):
        value = getattr(args, field, None)
        if value is not None:
            data[field] = value
    if args.initial_data is not None:
        data["initial_data"] = parse_initial_data(args.initial_data)
    return RunConfig.model_validate(data)


def make_initial_data(config: RunConfig) -> ModeVector:
    """根据配置生成初始数据."""
    init = config.initial_data
    if isinstance(init, SingleModeInit):
        g0 = single_mode(config.N, init.n, init.a)
    elif isinstance(init, RandomDecayInit):
        g0 = random_initial_data(config.N, init.norm, init.decay_exponent, config.seed)
    else:
        assert isinstance(init, FileInit)
        g0 = load_initial_data(init.path, config.N)
        if g0.norm() > config.epsilon_guard and not config.allow_large_data:
            raise ConfigError(
                f"initial data norm {g0.norm():.6g} from {init.path} exceeds the small-data "
                f"guard {config.epsilon_guard}; pass --allow-large-data to override"
            )
    return g0


def _solve(config: RunConfig, settings: SpectralSettings, table: SpectralTable) -> Trajectory:
    g0 = make_initial_data(config)
    logger.info(
        "solving N=%d s=%g ||g0||=%.6g with %s on %d times",
        config.N,
        config.s,
        g0.norm(),
        config.method.value,
        config.t_steps,
    )
    return solve_triangular(
        table,
        g0,
        config.t_grid,
        method=config.method,
        resonance_tol=settings.kinetic_spectral_resonance_tol,
        term_cap=settings.kinetic_spectral_term_cap,
        rk_tol=settings.kinetic_spectral_rk_tol,
        blowup_factor=settings.kinetic_spectral_blowup_factor,
    )


def write_spectrum_csv(table: SpectralTable, path: Path) -> Path:
    """(n, lambda_n, asymptote_ratio, convolution_sum_ratio); ratios blank below n = 2."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "lambda", "asymptote_ratio", "convolution_sum_ratio"])
        for n in range(table.N + 1):
            ratio = _fmt(asymptote_ratio(table, n)) if n >= 2 else ""
            conv = _fmt(convolution_sum_ratio(table, n)) if 2 <= n <= table.coupling_order else ""
            writer.writerow([n, _fmt(table.lambdas[n]), ratio, conv])
    return path


def write_norms_csv(
    table: SpectralTable, trajectory: Trajectory, taus: Sequence[float], c0: float, path: Path
) -> Path:
    """Per-time L2, Shubin Q^tau and exp-log-harmonic (fitted c0) norms."""
    header = ["t", "l2"] + [f"shubin_{_fmt(tau)}" for tau in taus] + ["logexp"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t, row in zip(trajectory.times, trajectory.coeffs):
            values = [float(linalg.norm(row))]
            for tau in taus:
                values.append(float(np.exp(log_weighted_norm_coeffs(table, row, ShubinWeight(tau=tau)))))
            weight = LogExpWeight(c=c0, t=float(t), s=table.s)
            values.append(float(np.exp(log_weighted_norm_coeffs(table, row, weight))))
            writer.writerow([_fmt(t)] + [_fmt(v) for v in values])
    return path


def _verify(
    config: RunConfig, settings: SpectralSettings, table: SpectralTable, out: Path
) -> List[CertificationReport]:
    trajectory = _solve(config, settings, table)
    g0_norm = float(linalg.norm(trajectory.coeffs[0]))
    c0_hat = fit_c0(table)
    fitted: Dict[str, float] = {"c0_hat": c0_hat}
    if config.s < 2.0:
        fitted["cs_hat"] = fit_cs(c0_hat, config.s)

    c_hat = trilinear_constant_probe(table, config.probe_samples, config.seed)
    fitted["trilinear_C_hat"] = c_hat
    if c_hat > 0.0:
        fitted["epsilon0_hat"] = 1.0 / (4.0 * c_hat)
        if g0_norm > fitted["epsilon0_hat"]:
            logger.warning(
                "||g0||=%.6g exceeds the estimated small-data threshold %.6g",
                g0_norm,
                fitted["epsilon0_hat"],
            )
    fitted["energy_C1_hat"] = energy_constant_probe(table, trajectory)

    reports = [
        certify_table(table, strict=False),
        certify_eigen_identity(table, n_max=16, strict=False),
        certify_energy_inequality(table, trajectory, g0_norm, config.slack, strict=False),
        certify_monotone_decay(table, trajectory, config.monotone_slack, strict=False),
        certify_rates(
            table, trajectory, g0_norm, c0_hat, fitted.get("cs_hat"), slack=config.slack, strict=False
        ),
        certify_weight_chain(table, c0_hat * config.t_max, strict=False),
        young_sample_check(config.young_samples, config.seed, strict=False),
    ]
    document = {
        "s": config.s,
        "N": config.N,
        "method": trajectory.method.value,
        "reports": [r.to_document() for r in reports],
        "fitted_constants": fitted,
    }
    path = out / "verify_report.json"
    path.write_text(json.dumps(document, indent=1) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return reports


def run(
    command: str, config: RunConfig, settings: Optional[SpectralSettings] = None
) -> Dict[str, Path]:
    """执行子命令并返回生成的文件.

    Raises:
        CertificationFailure: verify found a failing check (artifacts still written).
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    settings = settings or get_settings()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    kernel = CollisionKernel(s=config.s)
    with SpectralCache(settings) as cache:
        table = cache.get_or_build(kernel, config.N, config.tol)
        artifacts: Dict[str, Path] = {"table": cache.path_for(table.s, table.N, table.tol, table.coupling_order)}

    if command == "spectrum":
        artifacts["spectrum"] = write_spectrum_csv(table, out / "spectrum.csv")
    elif command == "solve":
        trajectory = _solve(config, settings, table)
        artifacts["trajectory"] = write_trajectory_csv(trajectory, out / "trajectory.csv")
        if trajectory.solution is not None:
            artifacts["expsum"] = write_expsum_json(trajectory.solution, out / "expsum.json")
    elif command == "norms":
        trajectory = _solve(config, settings, table)
        artifacts["norms"] = write_norms_csv(
            table, trajectory, config.shubin_taus, fit_c0(table), out / "norms.csv"
        )
    else:
        reports = _verify(config, settings, table, out)
        artifacts["verify_report"] = out / "verify_report.json"
        failed = [r for r in reports if not r.passed]
        if failed:
            raise CertificationFailure(f"{failed[0].check}: {failed[0].message}", failed[0])
    return artifacts


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数."""
    args = build_parser().parse_args(argv)
    command = args.command
    try:
        settings = get_settings()
    except ValidationError as e:
        print(f"kinetic-spectral {command}: invalid environment settings: {e}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=settings.kinetic_spectral_log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )

    try:
        config = build_config(args)
        run(command, config, settings)
    except (ConfigError, ValidationError, InvalidInitialData, TruncationMismatch, DomainError) as e:
        print(f"kinetic-spectral {command}: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CertificationFailure as e:
        print(f"kinetic-spectral {command}: certification failed: {e}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except NUMERIC_FAILURES + (InvariantViolation,) as e:
        print(f"kinetic-spectral {command}: numeric failure ({type(e).__name__}): {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

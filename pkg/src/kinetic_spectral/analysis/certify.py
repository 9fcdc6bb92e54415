"""Numerical certification of the energy, decay and smoothing inequalities."""

import logging
import math
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import cumulative_trapezoid
from scipy.special import logsumexp

from ..errors import CertificationFailure, DomainError, InvariantViolation
from ..galerkin import Trajectory
from ..kernel import CollisionKernel
from ..spectrum import (
    SpectralTable,
    asymptote_ratio,
    check_table,
    convolution_sum_ratio,
    self_interaction_coefficients,
    superadditivity_margin,
)
from .weights import (
    LogExpWeight,
    ShubinWeight,
    harmonic_log_levels,
    log_weighted_norm_coeffs,
)

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 1e-6
DEFAULT_MONOTONE_SLACK = 1e-9
REFINE_TOL = 1e-8
_MAX_DOUBLINGS = 8

FloatArray = npt.NDArray[np.float64]


class CertificationReport(BaseModel):
    """Outcome of one check, serialized as {check, pass, worst_t, worst_margin, fitted_constants}."""

    model_config = ConfigDict(populate_by_name=True)

    check: str
    passed: bool = Field(alias="pass")
    worst_t: Optional[float] = None
    worst_margin: float
    fitted_constants: Dict[str, float] = Field(default_factory=dict)
    message: str = ""
    details: Dict[str, Any] = Field(default_factory=dict)

    def to_document(self) -> Dict[str, Any]:
        return self.model_dump(by_alias=True, mode="json")


def _finish(report: CertificationReport, strict: bool) -> CertificationReport:
    if report.passed:
        logger.info("%s: pass (worst margin %.6g)", report.check, report.worst_margin)
        return report
    logger.warning("%s: FAIL %s", report.check, report.message)
    if strict:
        raise CertificationFailure(f"{report.check}: {report.message}", report)
    return report


def _worst(margins: FloatArray, times: FloatArray) -> Tuple[float, Optional[float]]:
    if margins.size == 0:
        return math.inf, None
    i = int(np.argmin(margins))
    return float(margins[i]), float(times[i])


def _first_violation(margins: FloatArray, times: FloatArray) -> Optional[float]:
    bad = np.flatnonzero(margins < 0.0)
    return float(times[bad[0]]) if bad.size else None


def _cumulative_time_integral(
    trajectory: Trajectory, integrand: Callable[[FloatArray, FloatArray], FloatArray]
) -> FloatArray:
    """∫_0^{t_i} integrand dτ by trapezoids, refined through the exact solution when present."""
    times = trajectory.times
    estimate = cumulative_trapezoid(integrand(trajectory.coeffs, times), times, initial=0.0)
    solution = trajectory.solution
    if solution is None or times.size < 2:
        return estimate

    factor = 1
    for _ in range(_MAX_DOUBLINGS):
        factor *= 2
        fine = np.concatenate(
            [np.linspace(a, b, factor, endpoint=False) for a, b in zip(times[:-1], times[1:])]
            + [times[-1:]]
        )
        refined = cumulative_trapezoid(integrand(solution.evaluate(fine), fine), fine, initial=0.0)[
            ::factor
        ]
        change = float(np.max(np.abs(refined - estimate)))
        estimate = refined
        if change < REFINE_TOL:
            logger.debug("time integral converged after %d subdivisions", factor)
            return estimate
    logger.warning("time integral still changing after %d subdivisions", factor)
    return estimate


def certify_energy_inequality(
    table: SpectralTable,
    trajectory: Trajectory,
    g0_norm: float,
    slack: float = DEFAULT_SLACK,
    strict: bool = True,
) -> CertificationReport:
    """Σ g_n(t)^2 + ½∫_0^t Σ lambda_n g_n^2 dτ <= ||g0||^2 (1 + slack) at every grid time."""
    N = trajectory.N
    lam = np.asarray(table.lambdas[: N + 1])

    def dissipation(coeffs: FloatArray, _times: FloatArray) -> FloatArray:
        return 0.5 * (coeffs**2 @ lam)

    lhs = np.sum(trajectory.coeffs**2, axis=1) + _cumulative_time_integral(trajectory, dissipation)
    bound = g0_norm**2 * (1.0 + slack)
    margins = bound - lhs
    worst_margin, worst_t = _worst(margins, trajectory.times)
    first = _first_violation(margins, trajectory.times)
    report = CertificationReport(
        check="energy_inequality",
        passed=first is None,
        worst_t=worst_t,
        worst_margin=worst_margin,
        message="" if first is None else f"LHS exceeds ||g0||^2 first at t={first:.6g}",
        details={"first_violation_t": first, "slack": slack},
    )
    return _finish(report, strict)


def _log_semigroup_energy(lam: FloatArray, coeffs: FloatArray, t: float) -> float:
    mask = coeffs != 0.0
    if not np.any(mask):
        return -math.inf
    return float(logsumexp(lam[mask] * t + 2.0 * np.log(np.abs(coeffs[mask]))))


def certify_monotone_decay(
    table: SpectralTable,
    trajectory: Trajectory,
    slack: float = DEFAULT_MONOTONE_SLACK,
    strict: bool = True,
) -> CertificationReport:
    """D(t) = e^{lambda_2 t/2} Σ e^{lambda_n t} g_n(t)^2 is nonincreasing up to relative slack."""
    N = trajectory.N
    lam = np.asarray(table.lambdas[: N + 1])
    lam2 = float(table.lambdas[2])
    log_d = np.array(
        [
            0.5 * lam2 * t + _log_semigroup_energy(lam, row, float(t))
            for t, row in zip(trajectory.times, trajectory.coeffs)
        ]
    )
    allowance = math.log1p(slack)
    margins = np.full(max(log_d.size - 1, 0), allowance)
    for i in range(log_d.size - 1):
        prev, nxt = log_d[i], log_d[i + 1]
        if nxt == -math.inf:
            continue
        margins[i] = -math.inf if prev == -math.inf else allowance - (nxt - prev)
    step_times = trajectory.times[1:]
    worst_margin, worst_t = _worst(margins, step_times)
    first = _first_violation(margins, step_times)
    report = CertificationReport(
        check="monotone_decay",
        passed=first is None,
        worst_t=worst_t,
        worst_margin=worst_margin,
        message="" if first is None else f"D(t) increases on the step ending at t={first:.6g}",
        details={"first_violation_t": first, "slack": slack},
    )
    return _finish(report, strict)


def fit_c0(table: SpectralTable) -> float:
    """½ min_{2<=n<=N} asymptote_ratio(n): largest c with c (log(2n+5/2))^{2/s} <= lambda_n / 2."""
    return 0.5 * min(asymptote_ratio(table, n) for n in range(2, table.N + 1))


def fit_cs(c0: float, s: float) -> float:
    """((2-s)/4) (s/(4 c0))^{s/(2-s)}, from the Young inequality with tau = c0 t."""
    if not 0.0 < s < 2.0:
        raise DomainError(f"fit_cs: s={s} outside (0, 2)")
    if not c0 > 0.0:
        raise DomainError(f"fit_cs: c0 must be positive, got {c0}")
    return (2.0 - s) / 4.0 * (s / (4.0 * c0)) ** (s / (2.0 - s))


def _margin(rhs: float, lhs: float) -> float:
    if lhs == -math.inf:
        return math.inf
    return rhs - lhs


def certify_rates(
    table: SpectralTable,
    trajectory: Trajectory,
    g0_norm: float,
    c0_hat: float,
    cs_hat: Optional[float] = None,
    ks: Iterable[int] = range(1, 9),
    slack: float = DEFAULT_SLACK,
    strict: bool = True,
) -> CertificationReport:
    """Decay of the exp-log-harmonic and Shubin norms.

    (a) ||e^{c0 t (log(H+1))^{2/s}} g(t)|| <= e^{-lambda_2 t/4} ||g0||
    (b) ||g(t)||_{Q^{2 c0 t}} <= e^{-lambda_2 t/4} ||g0||
    (c) for s < 2 and t > 0, ||g(t)||_{Q^k} <= e^{-lambda_2 t/4 + cs (1/t)^{s/(2-s)} k^{2/(2-s)}} ||g0||

    Margins are compared in log space.
    """
    s = table.s
    lam2 = float(table.lambdas[2])
    log_g0 = math.log(g0_norm) if g0_norm > 0.0 else -math.inf
    allowance = math.log1p(slack)
    fitted: Dict[str, float] = {"c0_hat": c0_hat}
    check_c = s < 2.0
    if check_c and cs_hat is None:
        cs_hat = fit_cs(c0_hat, s)
    if cs_hat is not None:
        fitted["cs_hat"] = cs_hat
    k_list = list(ks)

    parts: Dict[str, List[Tuple[float, float]]] = {"a": [], "b": [], "c": []}
    for t, row in zip(trajectory.times, trajectory.coeffs):
        t = float(t)
        rhs = -lam2 * t / 4.0 + log_g0 + allowance
        parts["a"].append((t, _margin(rhs, log_weighted_norm_coeffs(table, row, LogExpWeight(c=c0_hat, t=t, s=s)))))
        parts["b"].append((t, _margin(rhs, log_weighted_norm_coeffs(table, row, ShubinWeight(tau=2.0 * c0_hat * t)))))
        if check_c and t > 0.0:
            assert cs_hat is not None
            for k in k_list:
                smoothing = cs_hat * (1.0 / t) ** (s / (2.0 - s)) * k ** (2.0 / (2.0 - s))
                lhs = log_weighted_norm_coeffs(table, row, ShubinWeight(tau=float(k)))
                parts["c"].append((t, _margin(rhs + smoothing, lhs)))

    details: Dict[str, Any] = {"ks": k_list if check_c else []}
    worst_margin, worst_t, message = math.inf, None, ""
    failed: List[str] = []
    for name, entries in parts.items():
        if not entries:
            continue
        times = np.array([e[0] for e in entries])
        margins = np.array([e[1] for e in entries])
        m, at = _worst(margins, times)
        first = _first_violation(margins, times)
        details[name] = {"worst_margin": m, "worst_t": at, "first_violation_t": first}
        if first is not None:
            failed.append(f"({name}) fails first at t={first:.6g}")
        if m < worst_margin:
            worst_margin, worst_t = m, at
    if failed:
        message = "; ".join(failed)

    report = CertificationReport(
        check="rates",
        passed=not failed,
        worst_t=worst_t,
        worst_margin=worst_margin,
        fitted_constants=fitted,
        message=message,
        details=details,
    )
    return _finish(report, strict)


def certify_weight_chain(
    table: SpectralTable, c0t: float, strict: bool = True
) -> CertificationReport:
    """(2n+5/2)^{c0 t} <= e^{c0 t (log(2n+5/2))^{2/s}} for 1 <= n <= N.

    n = 0 is excluded: log(5/2) < 1 reverses the inequality for s < 2.
    """
    if c0t < 0.0:
        raise DomainError(f"certify_weight_chain: c0 t must be nonnegative, got {c0t}")
    levels = harmonic_log_levels(table.N)[1:]
    margins = c0t * (levels ** (2.0 / table.s) - levels)
    i = int(np.argmin(margins))
    bad = np.flatnonzero(margins < -1e-12 * np.maximum(1.0, c0t * levels))
    report = CertificationReport(
        check="weight_chain",
        passed=bad.size == 0,
        worst_margin=float(margins[i]),
        fitted_constants={"c0t": c0t},
        message="" if bad.size == 0 else f"chain inequality fails at n={int(bad[0]) + 1}",
        details={"worst_n": i + 1},
    )
    return _finish(report, strict)


def young_log_values(x: float, tau: float, k: float, s: float) -> Tuple[float, float]:
    """(log h, log bound) with h = e^{2 tau (log x)^{2/s}} / x^k."""
    if not 0.0 < s < 2.0:
        raise DomainError(f"young_bound_check: s={s} outside (0, 2)")
    if not x >= 1.0:
        raise DomainError(f"young_bound_check: x={x} below 1")
    if not tau > 0.0:
        raise DomainError(f"young_bound_check: tau={tau} must be positive")
    if not k >= 1.0:
        raise DomainError(f"young_bound_check: k={k} below 1")
    log_x = math.log(x)
    log_h = 2.0 * tau * log_x ** (2.0 / s) - k * log_x
    log_bound = -(2.0 - s) / 2.0 * (s / (4.0 * tau)) ** (s / (2.0 - s)) * k ** (2.0 / (2.0 - s))
    return log_h, log_bound


def young_bound_check(x: float, tau: float, k: float, s: float) -> Tuple[float, float]:
    """(h_{tau,k}(x), e^{-((2-s)/2)(s/(4 tau))^{s/(2-s)} k^{2/(2-s)}}); h >= bound."""
    log_h, log_bound = young_log_values(x, tau, k, s)
    h = math.exp(log_h) if log_h < 709.0 else math.inf
    return h, math.exp(log_bound)


def young_sample_check(
    samples: int = 10_000, seed: int = 0, strict: bool = True
) -> CertificationReport:
    """Randomized scan of h >= bound over x in [1, 1e6], tau in (0, 4], k in [1, 10], s in (0, 2)."""
    rng = np.random.default_rng(seed)
    xs = np.exp(rng.uniform(0.0, math.log(1e6), samples))
    taus = rng.uniform(0.01, 4.0, samples)
    ks = rng.uniform(1.0, 10.0, samples)
    ss = rng.uniform(0.05, 1.95, samples)
    violations = 0
    worst = math.inf
    worst_sample: Dict[str, float] = {}
    for x, tau, k, s in zip(xs, taus, ks, ss):
        log_h, log_bound = young_log_values(float(x), float(tau), float(k), float(s))
        # the bound is attained at log x = (k s / (4 tau))^{s/(2-s)}
        margin = log_h - log_bound + 1e-10 * max(1.0, abs(log_bound))
        if margin < 0.0:
            violations += 1
        if margin < worst:
            worst = margin
            worst_sample = {"x": float(x), "tau": float(tau), "k": float(k), "s": float(s)}
    report = CertificationReport(
        check="young_inequality",
        passed=violations == 0,
        worst_margin=worst,
        message="" if violations == 0 else f"{violations} of {samples} samples violate h >= bound",
        details={"samples": samples, "violations": violations, "worst_sample": worst_sample},
    )
    return _finish(report, strict)


def certify_table(table: SpectralTable, strict: bool = True) -> CertificationReport:
    """Re-check the table invariants and record the super-additivity margin and asymptote window."""
    message = ""
    try:
        check_table(table)
        ok = True
    except InvariantViolation as e:
        ok, message = False, str(e)
    margin = superadditivity_margin(table)
    ratios = [asymptote_ratio(table, n) for n in range(2, table.N + 1)]
    fitted: Dict[str, float] = {
        "asymptote_min": min(ratios),
        "asymptote_max": max(ratios),
        "c0_hat": 0.5 * min(ratios),
    }
    if table.coupling_order >= 2:
        fitted["convolution_ratio_max"] = max(
            convolution_sum_ratio(table, n) for n in range(2, table.coupling_order + 1)
        )
    details: Dict[str, Any] = {}
    if margin.k is not None:
        fitted["superadditivity_margin"] = margin.margin
        details["superadditivity_argmin"] = [margin.k, margin.l]
    report = CertificationReport(
        check="spectral_table",
        passed=ok,
        worst_margin=margin.margin,
        fitted_constants=fitted,
        message=message,
        details=details,
    )
    return _finish(report, strict)


def certify_eigen_identity(
    table: SpectralTable, n_max: int = 16, strict: bool = True
) -> CertificationReport:
    """Self-interaction coefficients sum to -lambda_n within 10 tol for n <= n_max."""
    kernel = CollisionKernel(s=table.s)
    top = min(n_max, table.N)
    margins = []
    for n in range(top + 1):
        i1, i2 = self_interaction_coefficients(kernel, n, tol=table.tol)
        margins.append(10.0 * table.tol - abs(i1 + i2 + float(table.lambdas[n])))
    arr = np.array(margins)
    i = int(np.argmin(arr))
    bad = np.flatnonzero(arr < 0.0)
    report = CertificationReport(
        check="eigen_identity",
        passed=bad.size == 0,
        worst_margin=float(arr[i]),
        message="" if bad.size == 0 else f"i1 + i2 != -lambda_n at n={int(bad[0])}",
        details={"n_max": top, "worst_n": i},
    )
    return _finish(report, strict)

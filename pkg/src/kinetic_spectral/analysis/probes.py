"""Monte Carlo and trajectory probes for the non-numeric constants C and ε0."""

import logging
import math
from typing import Optional

import numpy as np
import numpy.typing as npt
from scipy import linalg
from scipy.special import logsumexp

from ..errors import DomainError
from ..galerkin import ConvolutionPlan, ModeVector, Trajectory, source_terms
from ..spectrum import SpectralTable
from .weights import harmonic_log_levels

logger = logging.getLogger(__name__)


def _log_weighted(coeffs: npt.NDArray[np.float64], log_w: npt.NDArray[np.float64]) -> float:
    mask = (coeffs != 0.0) & np.isfinite(log_w)
    if not np.any(mask):
        return -math.inf
    return 0.5 * float(logsumexp(2.0 * (log_w[mask] + np.log(np.abs(coeffs[mask])))))


def trilinear_ratio(
    table: SpectralTable, f: ModeVector, g: ModeVector, h: ModeVector
) -> float:
    """|(Γ(f,g), h)| / (||f|| ||(log(H+1))^{1/s} g|| ||(log(H+1))^{1/s} h||); 0 if a factor vanishes."""
    N = f.N
    table.require_couplings(N)
    plan = ConvolutionPlan(table, N)
    weight = harmonic_log_levels(N) ** (1.0 / table.s)
    pairing = float(plan.apply(f.coeffs, g.coeffs) @ h.coeffs)
    denominator = f.norm() * float(linalg.norm(weight * g.coeffs)) * float(
        linalg.norm(weight * h.coeffs)
    )
    return abs(pairing) / denominator if denominator > 0.0 else 0.0


def trilinear_constant_probe(
    table: SpectralTable,
    sample_count: int,
    seed: int = 0,
    N: Optional[int] = None,
) -> float:
    """Largest trilinear ratio over random unit admissible triples: an empirical lower bound for C."""
    if sample_count < 1:
        raise DomainError(f"trilinear_constant_probe: sample_count must be positive, got {sample_count}")
    order = table.coupling_order if N is None else N
    table.require_couplings(order)
    if order < 4:
        # Γ of modes >= 2 lands on modes >= 4
        return 0.0
    rng = np.random.default_rng(seed)
    plan = ConvolutionPlan(table, order)
    weight = harmonic_log_levels(order) ** (1.0 / table.s)

    def draw() -> npt.NDArray[np.float64]:
        v = np.zeros(order + 1)
        v[2:] = rng.standard_normal(order - 1)
        return v / linalg.norm(v)

    best = 0.0
    for _ in range(sample_count):
        f, g, h = draw(), draw(), draw()
        ratio = abs(float(plan.apply(f, g) @ h)) / (
            float(linalg.norm(weight * g)) * float(linalg.norm(weight * h))
        )
        best = max(best, ratio)
    logger.info("trilinear probe: C_hat=%.6g over %d samples (N=%d)", best, sample_count, order)
    return best


def estimate_small_data_threshold(
    table: SpectralTable, samples: int = 2_000, seed: int = 0
) -> float:
    """ε0_hat = 1 / (4 C_hat) with C_hat from the trilinear probe."""
    c_hat = trilinear_constant_probe(table, samples, seed)
    return math.inf if c_hat == 0.0 else 1.0 / (4.0 * c_hat)


def energy_constant_probe(table: SpectralTable, trajectory: Trajectory) -> float:
    """Largest observed C1 in the energy estimate along a trajectory.

    Uses the exact identity

        ½ d/dt ||e^{tL/2} S_N g||^2 + ½ ||e^{tL/2} L^{1/2} S_N g||^2 = (Γ(g, g), e^{tL} g)

    and returns max_t |(Γ(g, g), e^{tL} g)| / (||e^{tL/2} S_{N-2} g|| ||e^{tL/2} L^{1/2} S_N g||^2).
    """
    N = trajectory.N
    table.require_couplings(N)
    lam = np.asarray(table.lambdas[: N + 1])
    with np.errstate(divide="ignore"):
        log_lam = np.log(lam)

    best = 0.0
    for i in range(len(trajectory)):
        t = float(trajectory.times[i])
        g = trajectory[i]
        row = g.coeffs
        source = source_terms(table, g).coeffs
        exponents = lam * t
        shift = float(np.max(exponents))
        pairing = float(np.sum(np.exp(exponents - shift) * row * source))
        if pairing == 0.0:
            continue
        log_pairing = shift + math.log(abs(pairing))

        half = 0.5 * lam * t
        low = np.array(row)
        low[max(N - 1, 0) :] = 0.0
        log_low = _log_weighted(low, half)
        log_dissipation = _log_weighted(row, half + 0.5 * log_lam)
        if log_low == -math.inf or log_dissipation == -math.inf:
            continue
        best = max(best, math.exp(log_pairing - log_low - 2.0 * log_dissipation))
    logger.info("energy probe: C1_hat=%.6g over %d times", best, len(trajectory))
    return best

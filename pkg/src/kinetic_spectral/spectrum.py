"""Eigenvalues lambda_{n,0}, couplings mu_{k,l} and the spectral table.

The radial linearized operator is diagonal on phi_{n,0,0} with

    lambda_n = ∫_0^{π/4} beta(θ) (1 - cos^{2n}θ - sin^{2n}θ) dθ,

and the bilinear collision operator sends the pair (k, l) to mode k + l with
weight mu_{k,l}. Every factorial ratio goes through ``gammaln``.
"""

import logging
import math
from multiprocessing import Pool
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import gammaln

from .errors import DomainError, InvariantViolation, TruncationMismatch
from .kernel import KERNEL_NAME, CollisionKernel, MomentRoute, moment
from .quad import DEFAULT_MAX_EVALUATIONS, DEFAULT_TOL, integrate
from .specfun import legendre

logger = logging.getLogger(__name__)

# lambda_{n,l} vanishes on mass, energy and momentum
_COLLISION_INVARIANTS = {(0, 0), (1, 0), (0, 1)}


def _one_minus_cos_power(sin2: float, n: int) -> float:
    # 1 - cos^{2n} = -expm1(n log(1 - sin^2)), exact near θ = 0
    return -math.expm1(n * math.log1p(-sin2))


def lambda_radial(
    kernel: CollisionKernel,
    n: int,
    tol: float = DEFAULT_TOL,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> float:
    """Radial eigenvalue lambda_{n,0}; exactly 0 for n in {0, 1}."""
    if n < 0:
        raise DomainError(f"lambda_radial: n must be nonnegative, got {n}")
    if n <= 1:
        return 0.0
    density = kernel.density()

    def integrand(theta: float) -> float:
        sin2 = math.sin(theta) ** 2
        return density(theta) * (_one_minus_cos_power(sin2, n) - sin2**n)

    return integrate(
        integrand,
        0.0,
        kernel.theta_max,
        tol=tol,
        singular_at_a=True,
        max_evaluations=max_evaluations,
    ).value


def lambda_general(
    kernel: CollisionKernel,
    n: int,
    l: int,
    tol: float = DEFAULT_TOL,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> float:
    """Eigenvalue lambda_{n,l} of the full linearized operator."""
    if n < 0 or l < 0:
        raise DomainError(f"lambda_general: indices must be nonnegative, got ({n}, {l})")
    if (n, l) in _COLLISION_INVARIANTS:
        return 0.0
    density = kernel.density()
    power = 2 * n + l
    delta = 1.0 if n == 0 and l == 0 else 0.0

    def integrand(theta: float) -> float:
        sin_t = math.sin(theta)
        cos_t = math.cos(theta)
        bracket = (
            1.0
            + delta
            - sin_t**power * float(legendre(l, sin_t))
            - cos_t**power * float(legendre(l, cos_t))
        )
        return density(theta) * bracket

    return integrate(
        integrand,
        0.0,
        kernel.theta_max,
        tol=tol,
        singular_at_a=True,
        max_evaluations=max_evaluations,
    ).value


def self_interaction_coefficients(
    kernel: CollisionKernel,
    n: int,
    tol: float = DEFAULT_TOL,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> Tuple[float, float]:
    """Coefficients of Γ(phi_0, phi_n) and Γ(phi_n, phi_0) along phi_n.

    Returns ``(∫beta(cos^{2n} - 1), ∫beta(sin^{2n} - δ_{0n}))``; their sum is
    ``-lambda_{n,0}``.
    """
    if n < 0:
        raise DomainError(f"self_interaction_coefficients: n must be nonnegative, got {n}")
    if n == 0:
        return 0.0, 0.0
    density = kernel.density()

    def cos_part(theta: float) -> float:
        return -density(theta) * _one_minus_cos_power(math.sin(theta) ** 2, n)

    i1 = integrate(
        cos_part, 0.0, kernel.theta_max, tol=tol, singular_at_a=True, max_evaluations=max_evaluations
    ).value
    i2 = moment(kernel, n, 0, tol=tol, max_evaluations=max_evaluations)
    return i1, i2


def mu_prefactor(k: int, l: int) -> float:
    """sqrt((2k+2l+1)! / ((2k+1)! (2l+1)!)) via log-gamma."""
    return math.exp(0.5 * (gammaln(2 * k + 2 * l + 2) - gammaln(2 * k + 2) - gammaln(2 * l + 2)))


def mu(
    kernel: CollisionKernel,
    k: int,
    l: int,
    tol: float = DEFAULT_TOL,
    route: MomentRoute = MomentRoute.THETA,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> float:
    """Coupling mu_{k,l} sending (phi_k, phi_l) to phi_{k+l}."""
    if k < 1 or l < 1:
        raise DomainError(f"mu: indices must be positive, got ({k}, {l})")
    return mu_prefactor(k, l) * moment(kernel, k, l, route, tol, max_evaluations)


def superadditivity_integrand(theta: float, k: int, l: int) -> float:
    """1 + c^{2k+2l} + s^{2k+2l} - c^{2k} - s^{2k} - c^{2l} - s^{2l} at θ."""
    sin2 = math.sin(theta) ** 2
    # (1 - c^{2k})(1 - c^{2l}) carries the 1 + c^{2k+2l} - c^{2k} - c^{2l} part
    product = _one_minus_cos_power(sin2, k) * _one_minus_cos_power(sin2, l)
    return product + sin2 ** (k + l) - sin2**k - sin2**l


class SpectralTable(BaseModel):
    """lambda_{n,0} for n <= N and mu_{k,l} for k, l >= 1, k + l <= coupling_order.

    ``mu`` is stored dense with zeros outside the admissible triangle.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    s: float = Field(gt=0.0, le=2.0)
    N: int = Field(ge=2)
    tol: float = Field(gt=0.0)
    coupling_order: int = Field(ge=0)
    lambdas: np.ndarray
    mu: np.ndarray

    @field_validator("lambdas", "mu", mode="before")
    @classmethod
    def as_float_array(cls, v: Any) -> npt.NDArray[np.float64]:
        arr = np.array(v, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def lambda_n(self, n: int) -> float:
        if not 0 <= n <= self.N:
            raise DomainError(f"lambda index {n} outside [0, {self.N}]")
        return float(self.lambdas[n])

    def mu_kl(self, k: int, l: int) -> float:
        if k < 1 or l < 1 or k + l > self.coupling_order:
            raise DomainError(
                f"mu index ({k}, {l}) outside k, l >= 1, k + l <= {self.coupling_order}"
            )
        return float(self.mu[k, l])

    def require_couplings(self, order: int) -> None:
        """Raise TruncationMismatch unless mu is tabulated up to ``order``."""
        if order > self.N or order > self.coupling_order:
            raise TruncationMismatch(
                f"table holds lambda to N={self.N} and mu to k+l={self.coupling_order}, "
                f"mode vector needs {order}"
            )

    def to_document(self) -> Dict[str, Any]:
        """JSON document with arrays and metadata."""
        triples: List[List[float]] = [
            [k, l, float(self.mu[k, l])]
            for k in range(1, self.coupling_order)
            for l in range(1, self.coupling_order - k + 1)
        ]
        return {
            "kernel": KERNEL_NAME,
            "s": self.s,
            "N": self.N,
            "tol": self.tol,
            "coupling_order": self.coupling_order,
            "lambda": [float(x) for x in self.lambdas],
            "mu": triples,
        }

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "SpectralTable":
        if doc.get("kernel") != KERNEL_NAME:
            raise ValueError(f"unknown kernel {doc.get('kernel')!r}")
        order = int(doc["coupling_order"])
        mu_arr = np.zeros((order + 1, order + 1))
        for k, l, value in doc["mu"]:
            mu_arr[int(k), int(l)] = value
        return cls(
            s=doc["s"],
            N=doc["N"],
            tol=doc["tol"],
            coupling_order=order,
            lambdas=doc["lambda"],
            mu=mu_arr,
        )


def _lambda_task(s: float, n: int, tol: float, max_evaluations: int) -> Tuple[int, float]:
    return n, lambda_radial(CollisionKernel(s=s), n, tol, max_evaluations)


def _mu_task(s: float, k: int, l: int, tol: float, max_evaluations: int) -> Tuple[int, int, float]:
    return k, l, mu(CollisionKernel(s=s), k, l, tol, max_evaluations=max_evaluations)


def build_table(
    kernel: CollisionKernel,
    N: int,
    tol: float = DEFAULT_TOL,
    coupling_order: Optional[int] = None,
    workers: int = 1,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> SpectralTable:
    """Tabulate and invariant-check lambda up to N and mu up to ``coupling_order``.

    Args:
        kernel: collision kernel.
        N: truncation order, N >= 2.
        tol: quadrature tolerance recorded in the table.
        coupling_order: largest k + l for mu; defaults to N.
        workers: process-pool size; 1 evaluates in-process.
        max_evaluations: quadrature budget per integral.

    Returns:
        SpectralTable satisfying every table invariant.
    """
    if N < 2:
        raise DomainError(f"build_table: N must be at least 2, got {N}")
    order = N if coupling_order is None else coupling_order
    if not 0 <= order <= N:
        raise DomainError(f"build_table: coupling order {order} outside [0, {N}]")

    lambda_jobs = [(kernel.s, n, tol, max_evaluations) for n in range(2, N + 1)]
    mu_jobs = [
        (kernel.s, k, l, tol, max_evaluations)
        for k in range(1, order)
        for l in range(1, order - k + 1)
    ]
    logger.info(
        "building spectral table s=%g N=%d coupling_order=%d (%d eigenvalues, %d couplings, workers=%d)",
        kernel.s,
        N,
        order,
        len(lambda_jobs),
        len(mu_jobs),
        workers,
    )

    if workers > 1:
        with Pool(workers) as process_pool:
            lambda_results = process_pool.starmap(_lambda_task, lambda_jobs)
            mu_results = process_pool.starmap(_mu_task, mu_jobs)
    else:
        lambda_results = [_lambda_task(*job) for job in lambda_jobs]
        mu_results = [_mu_task(*job) for job in mu_jobs]

    lambdas = np.zeros(N + 1)
    for n, value in lambda_results:
        lambdas[n] = value
    mu_arr = np.zeros((order + 1, order + 1))
    for k, l, value in mu_results:
        mu_arr[k, l] = value

    table = SpectralTable(
        s=kernel.s, N=N, tol=tol, coupling_order=order, lambdas=lambdas, mu=mu_arr
    )
    check_table(table)
    return table


class SuperadditivityMargin(NamedTuple):
    margin: float
    k: Optional[int]
    l: Optional[int]


def superadditivity_margin(table: SpectralTable) -> SuperadditivityMargin:
    """min of lambda_k + lambda_l - lambda_{k+l} over 2 <= k, l, k + l <= N."""
    lam = table.lambdas
    best = SuperadditivityMargin(math.inf, None, None)
    for k in range(2, table.N // 2 + 1):
        # l >= k by symmetry
        ls = np.arange(k, table.N - k + 1)
        margins = lam[k] + lam[ls] - lam[k + ls]
        j = int(np.argmin(margins))
        if margins[j] < best.margin:
            best = SuperadditivityMargin(float(margins[j]), k, int(ls[j]))
    return best


def check_table(table: SpectralTable) -> None:
    """Raise InvariantViolation naming the first failing entry."""
    lam = table.lambdas
    if lam.shape != (table.N + 1,):
        raise InvariantViolation(f"lambda has shape {lam.shape}, expected ({table.N + 1},)")
    if lam[0] != 0.0 or lam[1] != 0.0:
        raise InvariantViolation("lambda_0 and lambda_1 must be exactly 0")
    for n in range(2, table.N + 1):
        if not lam[n] > 0.0:
            raise InvariantViolation(f"lambda_{n} = {lam[n]!r} is not positive")
        if n > 2 and not lam[n] > lam[n - 1]:
            raise InvariantViolation(
                f"lambda not strictly increasing at n={n}: {lam[n - 1]!r} >= {lam[n]!r}"
            )
    order = table.coupling_order
    if table.mu.shape != (order + 1, order + 1):
        raise InvariantViolation(f"mu has shape {table.mu.shape}, expected ({order + 1}, {order + 1})")
    for k in range(1, order):
        for l in range(1, order - k + 1):
            if not table.mu[k, l] > 0.0:
                raise InvariantViolation(f"mu_({k},{l}) = {table.mu[k, l]!r} is not positive")
    margin = superadditivity_margin(table)
    if margin.margin <= 0.0:
        raise InvariantViolation(
            f"super-additivity fails at (k, l) = ({margin.k}, {margin.l}): margin {margin.margin!r}"
        )


def _log_level(n: int) -> float:
    # log of the H + 1 eigenvalue 2n + 5/2
    return math.log(2 * n + 2.5)


def asymptote_ratio(table: SpectralTable, n: int) -> float:
    """lambda_n / (log(2n + 5/2))^{2/s}."""
    if not 2 <= n <= table.N:
        raise DomainError(f"asymptote_ratio: n={n} outside [2, {table.N}]")
    return float(table.lambdas[n]) / _log_level(n) ** (2.0 / table.s)


def convolution_sum_ratio(table: SpectralTable, n: int) -> float:
    """Σ_{k+l=n} mu_{k,l}^2 / (log(2l + 5/2))^{2/s}, over (log(2n + 5/2))^{2/s}."""
    if not 2 <= n <= table.coupling_order:
        raise DomainError(f"convolution_sum_ratio: n={n} outside [2, {table.coupling_order}]")
    q = 2.0 / table.s
    total = math.fsum(table.mu[n - l, l] ** 2 / _log_level(l) ** q for l in range(1, n))
    return total / _log_level(n) ** q

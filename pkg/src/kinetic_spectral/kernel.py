"""Debye-Yukawa angular collision kernel and its trigonometric moments."""

import logging
import math
from enum import Enum
from typing import Callable

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import DivergentMoment, DomainError
from .quad import DEFAULT_MAX_EVALUATIONS, DEFAULT_TOL, QuadResult, integrate

logger = logging.getLogger(__name__)

KERNEL_NAME = "debye-yukawa-representative"


class MomentRoute(str, Enum):
    """Integration variable used for a kernel moment."""

    THETA = "theta"
    SUBSTITUTED = "substituted"


class CollisionKernel(BaseModel):
    """beta(theta) = C (sin θ)^(-1) (log 1/sin θ)^(2/s - 1) on (0, theta_max].

    The physical kernel is only known up to two-sided constants; this is the
    representative with C = 1 and natural logarithms.
    """

    model_config = ConfigDict(frozen=True)

    s: float = Field(gt=0.0, le=2.0, description="Debye-Yukawa exponent")
    theta_max: float = Field(default=math.pi / 4, description="support cutoff")
    representative_constant: float = Field(default=1.0, gt=0.0)

    @field_validator("theta_max")
    @classmethod
    def validate_theta_max(cls, v: float) -> float:
        if not 0.0 < v < math.pi / 2:
            raise ValueError("theta_max must lie in (0, pi/2)")
        return v

    @property
    def log_exponent(self) -> float:
        """Power 2/s - 1 of log(1/sin θ); zero for s = 2."""
        return 2.0 / self.s - 1.0

    def density(self) -> Callable[[float], float]:
        """Unchecked scalar beta for use inside integrands."""
        q = self.log_exponent
        c = self.representative_constant
        if q == 0.0:
            return lambda theta: c / math.sin(theta)

        def beta_q(theta: float) -> float:
            sin_t = math.sin(theta)
            return c * (-math.log(sin_t)) ** q / sin_t

        return beta_q


def beta(kernel: CollisionKernel, theta: float) -> float:
    """Evaluate the kernel at theta in (0, theta_max]."""
    if not 0.0 < theta <= kernel.theta_max:
        raise DomainError(
            f"beta: theta={theta} outside (0, {kernel.theta_max}]"
        )
    return kernel.density()(theta)


def integrate_relative(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    singular_at_a: bool,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> QuadResult:
    """Integrate to relative accuracy tol, re-running when the value is far below one."""
    first = integrate(f, a, b, tol=tol, singular_at_a=singular_at_a, max_evaluations=max_evaluations)
    if first.value == 0.0 or abs(first.value) >= 1.0:
        return first
    refined = integrate(
        f,
        a,
        b,
        tol=tol,
        singular_at_a=singular_at_a,
        max_evaluations=max_evaluations,
        abs_tol=tol * abs(first.value),
    )
    return QuadResult(
        value=refined.value,
        error_estimate=refined.error_estimate,
        evaluations=first.evaluations + refined.evaluations,
    )


def moment_quad(
    kernel: CollisionKernel,
    k: int,
    l: int,
    route: MomentRoute = MomentRoute.THETA,
    tol: float = DEFAULT_TOL,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> QuadResult:
    """Quadrature of ∫ beta sin^(2k) cos^(2l) over (0, theta_max] with its error data."""
    if k < 0 or l < 0:
        raise DomainError(f"moment: indices must be nonnegative, got k={k}, l={l}")
    if k == 0:
        raise DivergentMoment(
            f"moment: k=0 is not integrable against beta (l={l}); "
            "use it only inside difference combinations"
        )
    route = MomentRoute(route)

    if route is MomentRoute.THETA:
        density = kernel.density()

        def integrand(theta: float) -> float:
            sin_t = math.sin(theta)
            cos_t = math.cos(theta)
            return density(theta) * sin_t ** (2 * k) * cos_t ** (2 * l)

        return integrate_relative(integrand, 0.0, kernel.theta_max, tol, True, max_evaluations)

    # x = sin^2 θ
    q = kernel.log_exponent
    prefactor = kernel.representative_constant * 2.0 ** (-2.0 / kernel.s)
    upper = math.sin(kernel.theta_max) ** 2

    def substituted(x: float) -> float:
        log_part = (-math.log(x)) ** q if q != 0.0 else 1.0
        return log_part * x ** (k - 1) * (1.0 - x) ** (l - 0.5)

    result = integrate_relative(substituted, 0.0, upper, tol, True, max_evaluations)
    return QuadResult(
        value=prefactor * result.value,
        error_estimate=prefactor * result.error_estimate,
        evaluations=result.evaluations,
    )


def moment(
    kernel: CollisionKernel,
    k: int,
    l: int,
    route: MomentRoute = MomentRoute.THETA,
    tol: float = DEFAULT_TOL,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> float:
    """∫_0^{theta_max} beta(θ) sin^(2k)θ cos^(2l)θ dθ, k >= 1."""
    return moment_quad(kernel, k, l, route, tol, max_evaluations).value

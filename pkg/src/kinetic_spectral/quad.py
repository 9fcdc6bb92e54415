"""Adaptive one-dimensional quadrature robust to log-power endpoint singularities.

The base rule is QUADPACK's adaptive Gauss-Kronrod pair with bisection
(``scipy.integrate.quad``). Integrands singular at the left endpoint like
``θ^(-1+ε) (log 1/θ)^q`` are first mapped through ``θ = a + e^(-u)``, which
turns the singularity into a decaying tail on a half line; the tail is
truncated once the transformed integrand falls below ``tol * 1e-3``.
"""

import logging
import math
import sys
from typing import Callable, Optional

from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate as _scipy_integrate

from .errors import InvalidDomain, NonConvergence

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_EVALUATIONS = 1_000_000

# QUADPACK qags evaluates a 21-point Kronrod rule on the first interval and
# on both halves at every bisection.
_EVALS_PER_INTERVAL = 21
_TAIL_FACTOR = 1e-3
# exp(-u) underflows past ~745; stay clear of subnormals.
_U_CEILING = 700.0


class QuadResult(BaseModel):
    """Outcome of one adaptive integration."""

    model_config = ConfigDict(frozen=True)

    value: float
    error_estimate: float = Field(ge=0.0, description="absolute error estimate")
    evaluations: int = Field(ge=1)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    singular_at_a: bool = False,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
    abs_tol: Optional[float] = None,
) -> QuadResult:
    """Integrate ``f`` over ``(a, b]``.

    Args:
        f: scalar integrand, finite on (a, b].
        a, b: interval ends, ``a < b``.
        tol: absolute-or-relative target, i.e. ``|err| <= max(tol, tol*|value|)``.
        singular_at_a: apply the logarithmic substitution before subdividing.
        max_evaluations: evaluation budget before NonConvergence is raised.
        abs_tol: overrides the absolute part of the target, for integrals known
            to be far below unit size.

    Returns:
        QuadResult with value, absolute error estimate and evaluation count.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise InvalidDomain(f"integrate: invalid interval [{a}, {b}]")
    if not tol > 0:
        raise InvalidDomain(f"integrate: tolerance must be positive, got {tol}")

    epsabs = tol if abs_tol is None else abs_tol
    if not epsabs > 0:
        raise InvalidDomain(f"integrate: absolute tolerance must be positive, got {epsabs}")

    if singular_at_a:
        return _integrate_log_substituted(f, a, b, tol, epsabs, max_evaluations)
    return _adaptive(f, a, b, tol, epsabs, max_evaluations)


def _adaptive(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float,
    epsabs: float,
    max_evaluations: int,
    tail: float = 0.0,
    extra_evaluations: int = 0,
) -> QuadResult:
    limit = max(1, 1 + (max_evaluations - _EVALS_PER_INTERVAL) // (2 * _EVALS_PER_INTERVAL))
    out = _scipy_integrate.quad(
        g, lo, hi, epsabs=epsabs, epsrel=tol, limit=limit, full_output=1
    )
    value, abserr, info = float(out[0]), float(out[1]), out[2]
    evaluations = int(info["neval"]) + extra_evaluations
    target = max(epsabs, tol * abs(value))

    if not math.isfinite(value):
        raise NonConvergence(
            f"integrate: non-finite value on [{lo}, {hi}]", value, abserr, evaluations
        )
    if len(out) > 3 and abserr > target:
        # QUADPACK flagged ier != 0 and the estimate did not recover
        raise NonConvergence(
            f"integrate: error estimate {abserr:.3e} above tolerance {target:.3e} "
            f"after {evaluations} evaluations ({out[3]})",
            value,
            abserr,
            evaluations,
        )

    logger.debug(
        "integrate [%.6g, %.6g]: value=%.17g err=%.3e evals=%d",
        lo,
        hi,
        value,
        abserr,
        evaluations,
    )
    return QuadResult(
        value=value,
        error_estimate=abserr + tail,
        evaluations=max(1, evaluations),
    )


def _integrate_log_substituted(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float,
    epsabs: float,
    max_evaluations: int,
) -> QuadResult:
    width = b - a
    u0 = -math.log(width)

    def transformed(u: float) -> float:
        w = math.exp(-u)
        # rounding may push a + w past b at u = u0
        return f(min(a + w, b)) * w

    ceiling = _U_CEILING
    if a != 0.0:
        ceiling = min(ceiling, -math.log(4.0 * sys.float_info.epsilon * abs(a)))
    if ceiling <= u0 + 1.0:
        # interval too narrow relative to |a| for the map to resolve anything
        return _adaptive(f, a, b, tol, epsabs, max_evaluations)

    threshold = min(tol, epsabs) * _TAIL_FACTOR
    step = 1.0
    probes = 0
    upper = u0 + step
    while True:
        probes += 2
        tail = max(abs(transformed(upper)), abs(transformed(min(upper + 1.0, ceiling))))
        if tail < threshold:
            break
        if upper >= ceiling:
            raise NonConvergence(
                f"integrate: substituted integrand still {tail:.3e} at u={upper:.1f}, "
                f"above truncation threshold {threshold:.3e}",
                evaluations=probes,
            )
        step *= 2.0
        upper = min(u0 + step, ceiling)

    return _adaptive(
        transformed,
        u0,
        upper,
        tol,
        epsabs,
        max_evaluations - probes,
        tail=tail,
        extra_evaluations=probes,
    )

"""Special functions of the radial spectral basis.

All polynomial families are evaluated by their three-term recurrences and
every Gamma ratio goes through ``gammaln``; the explicit alternating Laguerre
sum is kept only as a small-degree reference.
"""

import math
from typing import Union

import numpy as np
import numpy.typing as npt
from scipy.special import gammaln

from .errors import DomainError

Real = Union[float, npt.NDArray[np.float64]]

_FOUR_PI = 4.0 * math.pi
# Y_0^0 = (4π)^(-1/2)
Y00 = 1.0 / math.sqrt(_FOUR_PI)


def _out(values: npt.NDArray[np.float64]) -> Real:
    return float(values) if values.ndim == 0 else values


def laguerre(n: int, alpha: float, x: npt.ArrayLike) -> Real:
    """Generalized Laguerre polynomial L_n^(alpha)(x) by forward recurrence."""
    if n < 0:
        raise DomainError(f"laguerre: degree must be nonnegative, got {n}")
    if not alpha > -1.0:
        raise DomainError(f"laguerre: alpha must exceed -1, got {alpha}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return _out(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return _out(cur)


def laguerre_explicit(n: int, alpha: float, x: float) -> float:
    """Reference value from the alternating factorial sum; cancels badly past n ~ 20."""
    total = 0.0
    for r in range(n + 1):
        log_coef = gammaln(alpha + n + 1) - gammaln(r + 1) - gammaln(n - r + 1) - gammaln(alpha + n - r + 1)
        total += (-1) ** (n - r) * math.exp(log_coef) * x ** (n - r)
    return total


def legendre(l: int, x: npt.ArrayLike) -> Real:
    """Legendre polynomial P_l(x) on [-1, 1] by Bonnet's recurrence."""
    if l < 0:
        raise DomainError(f"legendre: degree must be nonnegative, got {l}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise DomainError("legendre: arguments must lie in [-1, 1]")
    prev = np.ones_like(x)
    if l == 0:
        return _out(prev)
    cur = x.copy()
    for k in range(1, l):
        prev, cur = cur, ((2 * k + 1) * x * cur - k * prev) / (k + 1)
    return _out(cur)


def hermite_fn(n: int, x: npt.ArrayLike) -> Real:
    """L2(R)-normalized Hermite function with Gaussian e^(-x^2/4).

    H_n = (2π)^(-1/4) (n!)^(-1/2) (x/2 - d/dx)^n e^(-x^2/4), evaluated through
    H_(k+1) = x/sqrt(k+1) H_k - sqrt(k/(k+1)) H_(k-1).
    """
    if n < 0:
        raise DomainError(f"hermite_fn: order must be nonnegative, got {n}")
    x = np.asarray(x, dtype=float)
    prev = (2.0 * math.pi) ** -0.25 * np.exp(-(x**2) / 4.0)
    if n == 0:
        return _out(prev)
    cur = x * prev
    for k in range(1, n):
        prev, cur = cur, x * cur / math.sqrt(k + 1) - math.sqrt(k / (k + 1)) * prev
    return _out(cur)


def radial_normalization(n: int) -> float:
    """(n! / (sqrt(2) Γ(n + 3/2)))^(1/2) computed from log-gamma."""
    return math.exp(0.5 * (gammaln(n + 1) - 0.5 * math.log(2.0) - gammaln(n + 1.5)))


def radial_eigenfunction(n: int, r: npt.ArrayLike) -> Real:
    """phi_{n,0,0} at |v| = r."""
    if n < 0:
        raise DomainError(f"radial_eigenfunction: index must be nonnegative, got {n}")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("radial_eigenfunction: radius must be nonnegative")
    half_r2 = r**2 / 2.0
    values = radial_normalization(n) * np.exp(-half_r2 / 2.0) * np.asarray(laguerre(n, 0.5, half_r2)) * Y00
    return _out(values)


def oscillator_level(n: int, l: int = 0) -> float:
    """Eigenvalue 2n + l + 3/2 of H = -Δ + |v|^2/4 on phi_{n,l,m}."""
    return 2.0 * n + l + 1.5

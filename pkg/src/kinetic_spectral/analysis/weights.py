"""Diagonal spectral weights and weighted norms.

All weights act diagonally on phi_{n,0,0}; norms are accumulated in log space
because the exp-log-harmonic and semigroup weights overflow long before the
weighted norm itself does.
"""

import math
from typing import Literal, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import logsumexp
from typing_extensions import Annotated

from ..errors import TruncationMismatch, WeightOverflow
from ..galerkin import ModeVector
from ..spectrum import SpectralTable

_LOG_MAX = math.log(np.finfo(np.float64).max)


def harmonic_log_levels(N: int) -> npt.NDArray[np.float64]:
    """log(2n + 5/2), the log of the H + 1 eigenvalue on phi_{n,0,0}."""
    return np.log(2.0 * np.arange(N + 1) + 2.5)


class ShubinWeight(BaseModel):
    """w_n = (2n + 5/2)^{tau/2}."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["shubin"] = "shubin"
    tau: float

    def log_weights(self, table: SpectralTable, N: int) -> npt.NDArray[np.float64]:
        return 0.5 * self.tau * harmonic_log_levels(N)


class LogExpWeight(BaseModel):
    """w_n = exp(c t (log(2n + 5/2))^{2/s})."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["logexp"] = "logexp"
    c: float = Field(ge=0.0)
    t: float = Field(ge=0.0)
    s: float = Field(gt=0.0, le=2.0)

    def log_weights(self, table: SpectralTable, N: int) -> npt.NDArray[np.float64]:
        return self.c * self.t * harmonic_log_levels(N) ** (2.0 / self.s)


class SemigroupWeight(BaseModel):
    """w_n = exp(lambda_n t / 2) lambda_n^{lpower}, with 0^0 = 1."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["semigroup"] = "semigroup"
    t: float = Field(ge=0.0)
    lpower: float = Field(default=0.0, ge=0.0)

    def log_weights(self, table: SpectralTable, N: int) -> npt.NDArray[np.float64]:
        lam = np.asarray(table.lambdas[: N + 1])
        out = 0.5 * lam * self.t
        if self.lpower > 0.0:
            with np.errstate(divide="ignore"):
                out = out + self.lpower * np.log(lam)
        return out


WeightSpec = Annotated[
    Union[ShubinWeight, LogExpWeight, SemigroupWeight], Field(discriminator="kind")
]


def weights(table: SpectralTable, N: int, w: WeightSpec) -> npt.NDArray[np.float64]:
    """Per-mode weights w_n for 0 <= n <= N (inf where they overflow)."""
    with np.errstate(over="ignore"):
        return np.exp(w.log_weights(table, N))


def log_weighted_norm_coeffs(
    table: SpectralTable, coeffs: npt.NDArray[np.float64], w: WeightSpec
) -> float:
    """log (Σ w_n^2 g_n^2)^{1/2}; -inf for the zero vector."""
    N = coeffs.shape[0] - 1
    if N > table.N:
        raise TruncationMismatch(f"mode vector N={N} exceeds table N={table.N}")
    log_w = w.log_weights(table, N)
    mask = (coeffs != 0.0) & np.isfinite(log_w)
    if not np.any(mask):
        return -math.inf
    terms = 2.0 * (log_w[mask] + np.log(np.abs(coeffs[mask])))
    return 0.5 * float(logsumexp(terms))


def log_weighted_norm(table: SpectralTable, g: ModeVector, w: WeightSpec) -> float:
    return log_weighted_norm_coeffs(table, g.coeffs, w)


def weighted_norm(table: SpectralTable, g: ModeVector, w: WeightSpec) -> float:
    """(Σ_n w_n^2 g_n^2)^{1/2}.

    Raises:
        WeightOverflow: if the norm is not representable as a double.
    """
    log_norm = log_weighted_norm(table, g, w)
    if log_norm >= _LOG_MAX:
        raise WeightOverflow(
            f"weighted_norm: {w.kind} norm exp({log_norm:.6g}) exceeds the double range"
        )
    return math.exp(log_norm)

"""Mode-space Galerkin system for radial solutions.

With g = Σ g_n phi_{n,0,0} and g_0 = g_1 = 0, the truncated equation is the
triangular cascade

    g_n' + lambda_n g_n = Σ_{k+l=n, k,l>=1} mu_{k,l} g_k g_l,

so mode n is forced only by strictly lower modes. ``expsum`` solves it exactly
as finite sums Σ c t^p e^{-r t}; ``adaptive_numeric`` integrates the same
system with DOP853.
"""

import csv
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import linalg
from scipy.integrate import solve_ivp
from scipy.special import gammaln

from .errors import (
    DomainError,
    InvalidInitialData,
    NonConvergence,
    NumericBlowup,
    TruncationMismatch,
)
from .spectrum import SpectralTable

logger = logging.getLogger(__name__)

DEFAULT_RESONANCE_TOL = 1e-9
DEFAULT_TERM_CAP = 100_000
DEFAULT_RK_TOL = 1e-10
DEFAULT_BLOWUP_FACTOR = 1e3

_EVAL_CHUNK = 4096

FloatArray = npt.NDArray[np.float64]


class SolverMethod(str, Enum):
    """Cascade solver."""

    EXPSUM = "expsum"
    ADAPTIVE_NUMERIC = "adaptive_numeric"


class ModeVector(BaseModel):
    """Coefficients g_n = (g, phi_{n,0,0}) for 0 <= n <= N."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    N: int = Field(ge=0)
    coeffs: np.ndarray

    @field_validator("coeffs", mode="before")
    @classmethod
    def as_float_array(cls, v: Any) -> FloatArray:
        arr = np.array(v, dtype=np.float64)
        if arr.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def check_length(self) -> "ModeVector":
        if self.coeffs.shape != (self.N + 1,):
            raise ValueError(f"expected {self.N + 1} coefficients, got {self.coeffs.shape[0]}")
        return self

    @classmethod
    def from_coeffs(cls, coeffs: npt.ArrayLike) -> "ModeVector":
        arr = np.asarray(coeffs, dtype=np.float64)
        return cls(N=arr.shape[0] - 1, coeffs=arr)

    @classmethod
    def zeros(cls, N: int) -> "ModeVector":
        return cls(N=N, coeffs=np.zeros(N + 1))

    def norm(self) -> float:
        """L2 norm; the basis is orthonormal."""
        return float(linalg.norm(self.coeffs))

    def is_admissible(self) -> bool:
        """Orthogonal to the collision invariants: g_0 = g_1 = 0."""
        return not np.any(self.coeffs[:2])

    def support(self) -> List[int]:
        return [int(n) for n in np.flatnonzero(self.coeffs)]


def single_mode(N: int, n: int, a: float = 1.0) -> ModeVector:
    """a·phi_n in the truncation N."""
    if not 0 <= n <= N:
        raise DomainError(f"single_mode: n={n} outside [0, {N}]")
    coeffs = np.zeros(N + 1)
    coeffs[n] = a
    return ModeVector(N=N, coeffs=coeffs)


def random_initial_data(
    N: int, norm: float, decay_exponent: float = 2.0, seed: int = 0
) -> ModeVector:
    """a_n = ±u_n (n+1)^(-decay) on modes 2..N, rescaled to L2 norm ``norm``."""
    if N < 2:
        raise DomainError(f"random_initial_data: N must be at least 2, got {N}")
    rng = np.random.default_rng(seed)
    modes = np.arange(2, N + 1)
    u = rng.uniform(0.0, 1.0, modes.size)
    signs = np.where(rng.uniform(0.0, 1.0, modes.size) < 0.5, -1.0, 1.0)
    raw = signs * u * (modes + 1.0) ** (-decay_exponent)
    coeffs = np.zeros(N + 1)
    scale = float(linalg.norm(raw))
    if scale > 0.0:
        coeffs[2:] = raw * (norm / scale)
    return ModeVector(N=N, coeffs=coeffs)


def load_initial_data(path: Path, N: int) -> ModeVector:
    """Read coefficients from JSON (a list or ``{"coefficients": [...]}``), zero-padded to N."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInitialData(f"load_initial_data: cannot read {path}: {e}")
    if isinstance(data, dict):
        data = data.get("coefficients")
    if not isinstance(data, list) or not all(isinstance(x, (int, float)) for x in data):
        raise InvalidInitialData(f"load_initial_data: {path} holds no coefficient list")
    if len(data) > N + 1:
        raise TruncationMismatch(
            f"load_initial_data: {len(data)} coefficients exceed truncation N={N}"
        )
    coeffs = np.zeros(N + 1)
    coeffs[: len(data)] = data
    return ModeVector(N=N, coeffs=coeffs)


class ConvolutionPlan:
    """Index pairs (k, l), k, l >= 1, k + l <= N with their couplings."""

    def __init__(self, table: SpectralTable, N: int):
        ks: List[int] = []
        ls: List[int] = []
        for n in range(2, N + 1):
            for k in range(1, n):
                ks.append(k)
                ls.append(n - k)
        self.N = N
        self.ks = np.array(ks, dtype=np.intp)
        self.ls = np.array(ls, dtype=np.intp)
        self.ns = self.ks + self.ls
        self.weights = table.mu[self.ks, self.ls] if ks else np.zeros(0)

    def apply(self, f: FloatArray, g: FloatArray) -> FloatArray:
        if self.ks.size == 0:
            return np.zeros(self.N + 1)
        return np.bincount(
            self.ns, weights=self.weights * f[self.ks] * g[self.ls], minlength=self.N + 1
        )


def _check_pair(table: SpectralTable, *vectors: ModeVector) -> int:
    N = vectors[0].N
    for v in vectors[1:]:
        if v.N != N:
            raise TruncationMismatch(f"mode vectors truncated at {N} and {v.N}")
    table.require_couplings(N)
    return N


def gamma_apply(table: SpectralTable, f: ModeVector, g: ModeVector) -> ModeVector:
    """Γ(f, g) = Σ_n [-f_0 g_n lambda_n + Σ_{k+l=n} mu_{k,l} f_k g_l] phi_n."""
    N = _check_pair(table, f, g)
    out = ConvolutionPlan(table, N).apply(f.coeffs, g.coeffs)
    out -= f.coeffs[0] * g.coeffs * table.lambdas[: N + 1]
    return ModeVector(N=N, coeffs=out)


def source_terms(table: SpectralTable, g: ModeVector) -> ModeVector:
    """Right-hand side Σ_{k+l=n} mu_{k,l} g_k g_l of the cascade."""
    N = _check_pair(table, g)
    return ModeVector(N=N, coeffs=ConvolutionPlan(table, N).apply(g.coeffs, g.coeffs))


def _lambda_power(lam: FloatArray, power: float) -> FloatArray:
    out = np.zeros_like(lam)
    positive = lam > 0.0
    out[positive] = lam[positive] ** power
    return out


def linearized_apply(table: SpectralTable, g: ModeVector, power: float = 1.0) -> ModeVector:
    """L^power g, with 0^power taken as 0."""
    if g.N > table.N:
        raise TruncationMismatch(f"mode vector N={g.N} exceeds table N={table.N}")
    lam = table.lambdas[: g.N + 1]
    return ModeVector(N=g.N, coeffs=g.coeffs * _lambda_power(lam, power))


def project(g: ModeVector, M: int) -> ModeVector:
    """S_M: zero the coefficients above M."""
    if not 0 <= M <= g.N:
        raise DomainError(f"project: M={M} outside [0, {g.N}]")
    coeffs = np.array(g.coeffs)
    coeffs[M + 1 :] = 0.0
    return ModeVector(N=g.N, coeffs=coeffs)


class ExpSumSolution(BaseModel):
    """g_n(t) = Σ_j c_j t^{p_j} e^{-r_j t}, stored per mode as parallel arrays."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    N: int
    coeffs: List[np.ndarray]
    powers: List[np.ndarray]
    rates: List[np.ndarray]

    def term_count(self, n: Optional[int] = None) -> int:
        if n is None:
            return sum(c.size for c in self.coeffs)
        return int(self.coeffs[n].size)

    def terms(self, n: int) -> List[Tuple[float, int, float]]:
        return [
            (float(c), int(p), float(r))
            for c, p, r in zip(self.coeffs[n], self.powers[n], self.rates[n])
        ]

    def evaluate_mode(self, n: int, t: npt.ArrayLike) -> FloatArray:
        times = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.zeros(times.size)
        c, p, r = self.coeffs[n], self.powers[n], self.rates[n]
        for start in range(0, c.size, _EVAL_CHUNK):
            sl = slice(start, start + _EVAL_CHUNK)
            out += np.sum(
                c[sl, None]
                * np.power(times[None, :], p[sl, None])
                * np.exp(-r[sl, None] * times[None, :]),
                axis=0,
            )
        return out

    def evaluate(self, t: npt.ArrayLike) -> FloatArray:
        """Coefficient matrix of shape (len(t), N + 1)."""
        times = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return np.stack([self.evaluate_mode(n, times) for n in range(self.N + 1)], axis=1)

    def to_document(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "modes": [
                {"n": n, "terms": [list(term) for term in self.terms(n)]}
                for n in range(self.N + 1)
            ],
        }


class Trajectory(BaseModel):
    """Coefficients sampled on a time grid."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    times: np.ndarray
    coeffs: np.ndarray
    method: SolverMethod
    solution: Optional[ExpSumSolution] = None

    @property
    def N(self) -> int:
        return int(self.coeffs.shape[1] - 1)

    def __len__(self) -> int:
        return int(self.times.size)

    def __getitem__(self, i: int) -> ModeVector:
        return ModeVector(N=self.N, coeffs=self.coeffs[i])

    def resample(self, times: npt.ArrayLike) -> "Trajectory":
        """Re-evaluate on another grid; needs the exact solution."""
        if self.solution is None:
            raise DomainError("resample: trajectory carries no exact solution")
        grid = np.asarray(times, dtype=np.float64)
        return Trajectory(
            times=grid, coeffs=self.solution.evaluate(grid), method=self.method, solution=self.solution
        )


class _TermCapExceeded(Exception):
    pass


def _merge_terms(
    c: FloatArray, p: npt.NDArray[np.int64], r: FloatArray, resonance_tol: float
) -> Tuple[FloatArray, npt.NDArray[np.int64], FloatArray]:
    """Combine terms with equal power and rates within resonance_tol; drop exact cancellations."""
    if c.size == 0:
        return c, p, r
    order = np.lexsort((r, p))
    c, p, r = c[order], p[order], r[order]
    starts = np.ones(c.size, dtype=bool)
    starts[1:] = (p[1:] != p[:-1]) | (
        np.abs(r[1:] - r[:-1]) > resonance_tol * np.maximum(np.abs(r[1:]), np.abs(r[:-1]))
    )
    idx = np.flatnonzero(starts)
    c = np.add.reduceat(c, idx)
    p, r = p[idx], r[idx]
    keep = c != 0.0
    return c[keep], p[keep], r[keep]


def _duhamel(
    lam: float,
    a: float,
    src_c: FloatArray,
    src_p: npt.NDArray[np.int64],
    src_r: FloatArray,
    resonance_tol: float,
) -> Tuple[FloatArray, npt.NDArray[np.int64], FloatArray]:
    """Terms of a e^{-lam t} + ∫_0^t e^{-lam (t-τ)} Σ c τ^p e^{-r τ} dτ."""
    cs: List[FloatArray] = []
    ps: List[npt.NDArray[np.int64]] = []
    rs: List[FloatArray] = []
    if a != 0.0:
        cs.append(np.array([a]))
        ps.append(np.array([0], dtype=np.int64))
        rs.append(np.array([lam]))

    if src_c.size:
        delta = lam - src_r
        confluent = np.abs(delta) <= resonance_tol * np.maximum(abs(lam), np.abs(src_r))
        if np.any(confluent):
            # c t^{p+1}/(p+1) e^{-lam t}
            cp = src_p[confluent]
            cs.append(src_c[confluent] / (cp + 1))
            ps.append(cp + 1)
            rs.append(np.full(cp.size, lam))
            logger.debug("duhamel: %d confluent terms at rate %.17g", cp.size, lam)

        regular = ~confluent
        for P in np.unique(src_p[regular]):
            sel = regular & (src_p == P)
            c, d, r = src_c[sel], delta[sel], src_r[sel]
            P = int(P)
            for j in range(P + 1):
                falling = math.exp(gammaln(P + 1) - gammaln(P - j + 1))
                cs.append((-1) ** j * falling * c / d ** (j + 1))
                ps.append(np.full(c.size, P - j, dtype=np.int64))
                rs.append(r)
            tail = -((-1) ** P) * math.exp(gammaln(P + 1)) * c / d ** (P + 1)
            cs.append(tail)
            ps.append(np.zeros(c.size, dtype=np.int64))
            rs.append(np.full(c.size, lam))

    if not cs:
        return np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0)
    return _merge_terms(np.concatenate(cs), np.concatenate(ps), np.concatenate(rs), resonance_tol)


def build_expsum(
    table: SpectralTable,
    g0: ModeVector,
    resonance_tol: float = DEFAULT_RESONANCE_TOL,
    term_cap: int = DEFAULT_TERM_CAP,
) -> ExpSumSolution:
    """Exact exponential-sum solution by mode-by-mode Duhamel recursion."""
    N = _check_pair(table, g0)
    cs: List[FloatArray] = []
    ps: List[npt.NDArray[np.int64]] = []
    rs: List[FloatArray] = []
    for n in range(N + 1):
        src_c: List[FloatArray] = []
        src_p: List[npt.NDArray[np.int64]] = []
        src_r: List[FloatArray] = []
        for k in range(1, n):
            l = n - k
            weight = float(table.mu[k, l])
            if weight == 0.0 or cs[k].size == 0 or cs[l].size == 0:
                continue
            src_c.append((weight * np.outer(cs[k], cs[l])).ravel())
            src_p.append(np.add.outer(ps[k], ps[l]).ravel())
            src_r.append(np.add.outer(rs[k], rs[l]).ravel())
        if src_c:
            sc, sp, sr = _merge_terms(
                np.concatenate(src_c), np.concatenate(src_p), np.concatenate(src_r), resonance_tol
            )
        else:
            sc, sp, sr = np.zeros(0), np.zeros(0, dtype=np.int64), np.zeros(0)
        c, p, r = _duhamel(float(table.lambdas[n]), float(g0.coeffs[n]), sc, sp, sr, resonance_tol)
        if c.size > term_cap:
            raise _TermCapExceeded(f"mode {n} needs {c.size} terms (cap {term_cap})")
        cs.append(c)
        ps.append(p)
        rs.append(r)
    return ExpSumSolution(N=N, coeffs=cs, powers=ps, rates=rs)


def _solve_numeric(
    table: SpectralTable,
    g0: ModeVector,
    grid: FloatArray,
    rk_tol: float,
    guard: float,
) -> FloatArray:
    N = g0.N
    plan = ConvolutionPlan(table, N)
    lam = np.asarray(table.lambdas[: N + 1])
    t_end = float(grid[-1])
    if guard > 0.0 and float(np.max(np.abs(g0.coeffs))) > guard:
        raise NumericBlowup(f"solve_triangular: initial data already above guard {guard:.3e}")
    if t_end == 0.0:
        return np.tile(g0.coeffs, (grid.size, 1))

    def rhs(_t: float, y: FloatArray) -> FloatArray:
        return plan.apply(y, y) - lam * y

    def blowup(_t: float, y: FloatArray) -> float:
        return guard - float(np.max(np.abs(y)))

    blowup.terminal = True  # type: ignore[attr-defined]
    blowup.direction = -1  # type: ignore[attr-defined]

    # t_eval must be strictly increasing
    times, rows = np.unique(grid, return_inverse=True)
    result = solve_ivp(
        rhs,
        (0.0, t_end),
        np.array(g0.coeffs),
        method="DOP853",
        t_eval=times,
        rtol=rk_tol,
        atol=rk_tol,
        events=blowup if guard > 0.0 else None,
    )
    if result.status == 1:
        raise NumericBlowup(
            f"solve_triangular: |g_n| exceeded guard {guard:.3e} at t={float(result.t_events[0][0]):.6g}"
        )
    if result.status != 0:
        raise NonConvergence(f"solve_triangular: DOP853 failed: {result.message}")
    return np.ascontiguousarray(result.y.T[rows.ravel()])


def solve_triangular(
    table: SpectralTable,
    g0: ModeVector,
    t_grid: Sequence[float],
    method: SolverMethod = SolverMethod.EXPSUM,
    resonance_tol: float = DEFAULT_RESONANCE_TOL,
    term_cap: int = DEFAULT_TERM_CAP,
    rk_tol: float = DEFAULT_RK_TOL,
    blowup_factor: float = DEFAULT_BLOWUP_FACTOR,
) -> Trajectory:
    """Solve the truncated cascade from admissible g0 and sample it on t_grid.

    Args:
        table: spectral table covering g0's truncation.
        g0: initial coefficients with g_0 = g_1 = 0.
        t_grid: nondecreasing nonnegative sample times.
        method: ``expsum`` (exact, falls back to numeric past the term cap)
            or ``adaptive_numeric``.
        resonance_tol: relative rate gap treated as exact resonance.
        term_cap: per-mode exponential-sum size limit.
        rk_tol: DOP853 relative and absolute tolerance.
        blowup_factor: guard on max |g_n| relative to ||g0||.

    Returns:
        Trajectory, carrying the ExpSumSolution when one was built.
    """
    method = SolverMethod(method)
    table.require_couplings(g0.N)
    if not g0.is_admissible():
        raise InvalidInitialData(
            f"solve_triangular: g0 must satisfy g_0 = g_1 = 0, got {g0.coeffs[:2].tolist()}"
        )
    grid = np.asarray(t_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise DomainError("solve_triangular: t_grid must be a nonempty 1-d array")
    if np.any(grid < 0.0) or np.any(np.diff(grid) < 0.0):
        raise DomainError("solve_triangular: t_grid must be nonnegative and sorted")

    # max|g0| keeps the guard positive when the norm underflows
    guard = blowup_factor * max(g0.norm(), float(np.max(np.abs(g0.coeffs))))
    solution: Optional[ExpSumSolution] = None
    if method is SolverMethod.EXPSUM:
        try:
            solution = build_expsum(table, g0, resonance_tol, term_cap)
        except _TermCapExceeded as e:
            logger.warning("expsum term cap reached (%s); falling back to adaptive_numeric", e)
            method = SolverMethod.ADAPTIVE_NUMERIC
        else:
            logger.info("expsum solution built with %d terms", solution.term_count())

    if solution is not None:
        coeffs = solution.evaluate(grid)
        peak = float(np.max(np.abs(coeffs)))
        if peak > guard:
            where = int(np.argmax(np.max(np.abs(coeffs), axis=1) > guard))
            raise NumericBlowup(
                f"solve_triangular: |g_n| reached {peak:.3e} above guard {guard:.3e} "
                f"by t={grid[where]:.6g}"
            )
    else:
        coeffs = _solve_numeric(table, g0, grid, rk_tol, guard)

    return Trajectory(times=grid, coeffs=coeffs, method=method, solution=solution)


def _format(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(trajectory: Trajectory, path: Path) -> Path:
    """CSV with header t, g_0, ..., g_N and 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"g_{n}" for n in range(trajectory.N + 1)])
        for t, row in zip(trajectory.times, trajectory.coeffs):
            writer.writerow([_format(t)] + [_format(x) for x in row])
    return path


def write_expsum_json(solution: ExpSumSolution, path: Path) -> Path:
    """Term lists [c, p, r] per mode."""
    Path(path).write_text(json.dumps(solution.to_document(), indent=1) + "\n", encoding="utf-8")
    return path

"""Greedy point selection, the sample criterion and the choice of p.

Candidates for an order-q model are all pairs (lag, grid point) with
lag in 1..q, flattened lag-major: candidate ``k`` has lag ``k // G + 1``
and grid index ``k % G``. That order also fixes tie-breaking (smallest
lag, then smallest grid index).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _backend
from .core import Candidate, FunctionalSeries, Grid, PointSet, center, trapz
from .covariance import (
    LaggedCovariances,
    cov_matrix,
    cross_cov_matrix,
    estimate,
    regression_coefficients,
    solve_spd,
)
from .exceptions import (
    InsufficientSampleError,
    InvalidArgumentError,
    SelectionExhaustedError,
    SingularMatrixError,
)

__all__ = [
    "SelectionTrace",
    "GreedyState",
    "denominator_threshold",
    "initial_scores",
    "greedy_step",
    "select_points",
    "select_from_covariances",
    "qhat0_direct",
    "kmeans2",
    "estimate_p_kmeans",
    "estimate_p_cv",
    "DEFAULT_P_MAX",
]

DEFAULT_P_MAX = 10
DEN_RTOL = 1e-10
GAIN_RTOL = 1e-14


def denominator_threshold(variances) -> float:
    return DEN_RTOL * max(float(np.max(variances, initial=0.0)), 0.0)


class GreedyState:
    """Incremental forward selection on a covariance structure.

    Keeps the residual cross-covariances ``rres`` (response abscissas x
    candidates) and residual candidate variances after projecting out the
    chosen candidates. Adding candidate j is a rank-one Schur downdate, so
    every gain equals the exact increase of the criterion.

    Parameters
    ----------
    response : ndarray, shape (S, N)
        Covariance of the response at each abscissa with each candidate.
    weights : ndarray, shape (S,)
        Quadrature weights over the response abscissas.
    variances : ndarray, shape (N,)
        Candidate variances.
    kernel_column : callable
        ``j -> ndarray (N,)`` covariance of candidate j with every candidate.
    lags, abscissas : ndarray, shape (N,)
        Used for the same-lag separation constraint.
    delta : float
        Minimum separation between chosen abscissas sharing a lag.
    tau : float, optional
        Residual-variance threshold; defaults to ``1e-10 * max(variances)``.
    """

    def __init__(
        self,
        response: np.ndarray,
        weights: np.ndarray,
        variances: np.ndarray,
        kernel_column: Callable[[int], np.ndarray],
        lags: np.ndarray,
        abscissas: np.ndarray,
        delta: float,
        tau: float | None = None,
        kernels=None,
    ):
        self.rres = np.array(response, dtype=float, order="C")
        self.weights = np.ascontiguousarray(weights, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.diag = self.variances.copy()
        self.kernel_column = kernel_column
        self.lags = np.asarray(lags)
        self.abscissas = np.asarray(abscissas, dtype=float)
        self.delta = float(delta)
        self.tau = denominator_threshold(self.variances) if tau is None else float(tau)
        self.kernels = _backend.kernels if kernels is None else kernels
        self.admissible = np.ones(self.diag.size, dtype=np.uint8)
        self._factors: list[np.ndarray] = []
        self.chosen: list[int] = []
        self.gains: list[float] = []

    @property
    def criterion(self) -> float:
        """Criterion value of the current set (sum of the gains)."""
        return float(np.sum(self.gains))

    def best(self) -> tuple[int, float, int]:
        """(index, gain, skipped) of the best admissible candidate; index -1 if none."""
        return self.kernels.score_candidates(
            self.rres, self.weights, self.diag, self.admissible, self.tau
        )

    def add(self, j: int) -> float:
        """Commit candidate `j` and return its gain."""
        j = int(j)
        if not self.admissible[j]:
            raise InvalidArgumentError(f"candidate {j} is not admissible")
        col = np.asarray(self.kernel_column(j), dtype=float)
        for f in self._factors:
            col = col - f * f[j]
        d = col[j]
        if not d > self.tau:
            raise SingularMatrixError(
                f"candidate {j} is linearly dependent on the chosen set", pivot=float(d), index=j
            )
        lvec = np.ascontiguousarray(col / np.sqrt(d))
        rcol = np.ascontiguousarray(self.rres[:, j] / np.sqrt(d))
        gain = float(self.weights @ (rcol * rcol))
        self.kernels.schur_update(self.rres, self.diag, lvec, rcol)
        self._factors.append(lvec)
        self.chosen.append(j)
        self.gains.append(gain)
        same = self.lags == self.lags[j]
        close = np.abs(self.abscissas - self.abscissas[j]) < self.delta * (1.0 - 1e-9)
        self.admissible[same & close] = 0
        self.admissible[j] = 0
        return gain


def _fcar_state(cov: LaggedCovariances, delta: float, kernels=None) -> GreedyState:
    q, g = cov.q, cov.n_points
    response = np.hstack([cov.surface(lag) for lag in range(1, q + 1)])
    var = cov.variance()

    def kernel_column(j: int) -> np.ndarray:
        lag_j, t_j = divmod(j, g)
        lag_j += 1
        blocks = []
        for lag_k in range(1, q + 1):
            d = lag_j - lag_k
            # candidate with the smaller lag is the first argument
            blocks.append(cov.column(d, t_j) if d >= 0 else cov.row(-d, t_j))
        return np.concatenate(blocks)

    lags = np.repeat(np.arange(1, q + 1), g)
    absc = np.tile(cov.grid.points, q)
    return GreedyState(response, cov.grid.weights, np.tile(var, q), kernel_column, lags, absc, delta, kernels=kernels)


def _candidate(cov: LaggedCovariances, k: int) -> Candidate:
    lag, idx = divmod(int(k), cov.n_points)
    return Candidate.on(cov.grid, lag + 1, idx)


def _flat(cov: LaggedCovariances, c: Candidate) -> int:
    if c.lag > cov.q:
        raise InvalidArgumentError(f"candidate lag {c.lag} exceeds the estimated order {cov.q}")
    return (c.lag - 1) * cov.n_points + c.index


def _default_delta(grid: Grid, delta: float | None) -> float:
    if delta is None:
        return grid.step
    if delta < 0:
        raise InvalidArgumentError("delta must be nonnegative")
    return float(delta)


def initial_scores(cov: LaggedCovariances, q: int | None = None) -> np.ndarray:
    """Single-point criterion for every candidate, shape (q, G).

    Entry ``[lag-1, t]`` is the integral over s of ``c_lag(s, t)**2`` divided by
    ``c_0(t, t)``; points whose variance is below the threshold score ``-inf``.
    """
    q = cov.q if q is None else int(q)
    if not 1 <= q <= cov.q:
        raise InvalidArgumentError(f"order {q} not available from covariances of order {cov.q}")
    var = cov.variance()
    tau = denominator_threshold(var)
    w = cov.grid.weights
    out = np.empty((q, cov.n_points))
    ok = var > tau
    for lag in range(1, q + 1):
        surf = cov.surface(lag)
        num = w @ (surf * surf)
        out[lag - 1] = np.where(ok, num / np.where(ok, var, 1.0), -np.inf)
    return out


def greedy_step(cov: LaggedCovariances, points: PointSet, state: GreedyState | None = None):
    """Best candidate to add to `points` and its criterion gain.

    Parameters
    ----------
    state : GreedyState, optional
        Cached factorization for exactly `points`; rebuilt when omitted.

    Returns
    -------
    best : Candidate
    gain : float
    """
    if state is None:
        state = _fcar_state(cov, points.delta)
        for c in points:
            state.add(_flat(cov, c))
    elif [_flat(cov, c) for c in points] != state.chosen:
        raise InvalidArgumentError("greedy state does not match the point set")
    k, gain, _ = state.best()
    if k < 0:
        raise SelectionExhaustedError(f"no admissible candidate after {len(points)} points")
    return _candidate(cov, k), gain


@dataclass(frozen=True)
class SelectionTrace:
    """Outcome of greedy selection.

    `gains[i]` is the criterion increase from adding `chosen[i]`; its
    cumulative sum is the criterion along the path.
    """

    chosen: tuple[Candidate, ...]
    gains: np.ndarray
    skipped: tuple[int, ...]
    delta: float
    q: int = 1
    elapsed: float = 0.0
    stop_reason: str = "p_max"

    def __len__(self) -> int:
        return len(self.chosen)

    @property
    def points(self) -> PointSet:
        return PointSet(self.chosen, self.delta)

    @property
    def criterion(self) -> np.ndarray:
        return np.cumsum(self.gains)

    @property
    def log_gains(self) -> np.ndarray:
        return np.log(self.gains)

    def truncated(self, p: int) -> "SelectionTrace":
        return SelectionTrace(
            self.chosen[:p], self.gains[:p], self.skipped[:p], self.delta, self.q, self.elapsed, "truncated"
        )


def select_from_covariances(
    cov: LaggedCovariances, p_max: int = DEFAULT_P_MAX, delta: float | None = None, kernels=None
) -> SelectionTrace:
    """Greedy selection from precomputed covariances (see :func:`select_points`)."""
    if int(p_max) != p_max or p_max < 1:
        raise InvalidArgumentError(f"p_max must be a positive integer, got {p_max!r}")
    delta = _default_delta(cov.grid, delta)
    start = time.perf_counter()
    state = _fcar_state(cov, delta, kernels=kernels)
    skipped = []
    reason = "p_max"
    while len(state.chosen) < p_max:
        k, gain, n_skip = state.best()
        if k < 0:
            if not state.chosen:
                raise SingularMatrixError(
                    "no grid point has positive variance", pivot=float(np.max(state.variances, initial=0.0))
                )
            reason = "exhausted"
            break
        if not gain > 0.0 or (state.chosen and gain < GAIN_RTOL * state.criterion):
            reason = "negligible_gain"
            break
        state.add(k)
        skipped.append(n_skip)
    return SelectionTrace(
        tuple(_candidate(cov, k) for k in state.chosen),
        np.array(state.gains),
        tuple(skipped),
        delta,
        cov.q,
        time.perf_counter() - start,
        reason,
    )


def select_points(
    series: FunctionalSeries,
    q: int = 1,
    p_max: int = DEFAULT_P_MAX,
    delta: float | None = None,
    kernels=None,
) -> SelectionTrace:
    """Greedily select up to `p_max` (lag, abscissa) points of a centered series.

    The first point maximizes :func:`initial_scores`; each later one maximizes
    the exact criterion increase. Selection stops early when no admissible
    candidate remains or the best gain is negligible (below ``1e-14`` times the
    current criterion).
    """
    return select_from_covariances(estimate(series, q), p_max, delta, kernels=kernels)


def qhat0_direct(cov: LaggedCovariances, points: PointSet) -> float:
    """Sample criterion evaluated directly by an SPD solve and quadrature."""
    if len(points) == 0:
        return 0.0
    cross = cross_cov_matrix(cov, points)
    sol, _ = solve_spd(cov_matrix(cov, points), cross.T)
    return trapz(np.einsum("sj,js->s", cross, sol), cov.grid)


class KMeans2(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    single_cluster: bool


def kmeans2(values, tol: float = 1e-12, max_iter: int = 1000) -> KMeans2:
    """Two-cluster Lloyd iteration on scalars, seeded at the min and max.

    Label 0 is the cluster seeded at the minimum. When all values are equal
    no split exists: every label is 0 and `single_cluster` is set.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size < 2:
        raise InvalidArgumentError("k-means needs at least two values")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return KMeans2(np.zeros(x.size, dtype=int), np.array([lo, hi]), True)
    centers = np.array([lo, hi])
    for _ in range(max_iter):
        labels = (np.abs(x - centers[1]) < np.abs(x - centers[0])).astype(int)
        new = np.array([x[labels == c].mean() if np.any(labels == c) else centers[c] for c in (0, 1)])
        shift = np.max(np.abs(new - centers))
        centers = new
        if shift < tol:
            break
    labels = (np.abs(x - centers[1]) < np.abs(x - centers[0])).astype(int)
    return KMeans2(labels, centers, False)


def estimate_p_kmeans(trace: SelectionTrace | np.ndarray) -> int:
    """Number of points from two-means clustering of the log gains.

    The estimate is the last position whose log gain shares the cluster of the
    first one; without a split it is the trace length.
    """
    gains = np.asarray(trace.gains if isinstance(trace, SelectionTrace) else trace, dtype=float)
    if gains.size == 0:
        raise InvalidArgumentError("empty selection trace")
    if np.any(gains <= 0):
        raise InvalidArgumentError("gains must be positive")
    if gains.size == 1:
        return 1
    res = kmeans2(np.log(gains))
    if res.single_cluster:
        return int(gains.size)
    same = np.flatnonzero(res.labels == res.labels[0])
    return int(same[-1]) + 1


def estimate_p_cv(
    series: FunctionalSeries,
    q: int = 1,
    p_max: int = DEFAULT_P_MAX,
    folds: int = 5,
    delta: float | None = None,
) -> int:
    """Number of points by rolling-origin validation inside the sample.

    The series is cut into ``folds + 1`` consecutive blocks. Fold k fits on
    blocks ``0..k-1`` (recentred on that head) and predicts every curve of
    block k one step ahead from the true preceding curves. The chosen p
    minimizes the ratio-of-sums relative L2 error over all validated
    curves; ties go to the smaller p.
    """
    if int(p_max) != p_max or p_max < 1:
        raise InvalidArgumentError(f"p_max must be a positive integer, got {p_max!r}")
    if p_max == 1:
        return 1
    if folds < 1:
        raise InvalidArgumentError("folds must be >= 1")
    m = series.m
    edges = np.linspace(0, m, folds + 2).round().astype(int)
    if edges[1] < q + 3 or np.any(np.diff(edges) < 1):
        raise InsufficientSampleError(f"m={m} curves are too few for {folds} folds at order {q}")
    raw = series.values if series.mean_curve is None or not series.centered else series.values + series.mean_curve
    grid = series.grid
    err = np.zeros(p_max)
    tot = 0.0
    for k in range(1, folds + 1):
        head, mean = center(FunctionalSeries(grid, raw[: edges[k]]))
        cov = estimate(head, q)
        trace = select_from_covariances(cov, p_max, delta)
        fits = []
        for p in range(1, p_max + 1):
            pts = trace.points[: min(p, len(trace))]
            fits.append((pts, regression_coefficients(cov, pts)))
        for origin in range(edges[k], edges[k + 1]):
            recent = raw[origin - 1 :: -1][:q] - mean
            truth = raw[origin]
            tot += np.sqrt(trapz(truth * truth, grid))
            for p, (pts, alpha) in enumerate(fits):
                resid = truth - (mean + alpha @ recent[pts.lags - 1, pts.indices])
                err[p] += np.sqrt(max(trapz(resid * resid, grid), 0.0))
    score = err / tot if tot > 0 else err
    return int(np.argmin(score)) + 1

"""Sample lagged covariance surfaces and small SPD solves.

Divisors follow the usual moment estimator: ``1/(m - lag)`` for lagged
surfaces and ``1/m`` for the lag-0 surface.
"""

from __future__ import annotations

import numpy as np

from .core import Candidate, FunctionalSeries, Grid, PointSet
from .exceptions import InsufficientSampleError, InvalidArgumentError, SingularMatrixError

__all__ = [
    "LaggedCovariances",
    "estimate",
    "candidate_cov",
    "cov_matrix",
    "cross_cov_matrix",
    "cholesky",
    "solve_spd",
    "DENSE_LIMIT",
]

#: Surfaces are cached densely up to this many grid points.
DENSE_LIMIT = 1024


class LaggedCovariances:
    """Sample lagged covariances of a centered series up to order `q`.

    ``surface(lag)[a, b]`` is the estimate of Cov(X_{n+lag}(grid_a), X_n(grid_b)).
    Surfaces are materialized lazily; above :data:`DENSE_LIMIT` grid points
    only the requested rows and columns are ever computed.
    """

    def __init__(self, series: FunctionalSeries, q: int):
        self.grid: Grid = series.grid
        self.q = int(q)
        self.m = series.m
        self._x = series.values
        self._dense = len(self.grid) <= DENSE_LIMIT
        self._surfaces: dict[int, np.ndarray] = {}

    @property
    def n_points(self) -> int:
        return len(self.grid)

    def _check_lag(self, lag: int) -> int:
        lag = int(lag)
        if not 0 <= lag <= self.q:
            raise InvalidArgumentError(f"lag {lag} outside 0..{self.q}")
        return lag

    def _divisor(self, lag: int) -> int:
        return self.m if lag == 0 else self.m - lag

    def surface(self, lag: int) -> np.ndarray:
        """Full G x G surface for `lag` (cached when the grid is small)."""
        lag = self._check_lag(lag)
        if lag in self._surfaces:
            return self._surfaces[lag]
        x = self._x
        s = x[lag:].T @ x[: self.m - lag] / self._divisor(lag)
        if lag == 0:
            s = 0.5 * (s + s.T)
        s.setflags(write=False)
        if self._dense:
            self._surfaces[lag] = s
        return s

    @property
    def surfaces(self) -> dict[int, np.ndarray]:
        return {lag: self.surface(lag) for lag in range(self.q + 1)}

    def column(self, lag: int, b: int) -> np.ndarray:
        """``s -> c_lag(s, grid_b)`` over the grid."""
        lag = self._check_lag(lag)
        if self._dense:
            return self.surface(lag)[:, b]
        x = self._x
        return x[lag:].T @ x[: self.m - lag, b] / self._divisor(lag)

    def row(self, lag: int, a: int) -> np.ndarray:
        """``t -> c_lag(grid_a, t)`` over the grid."""
        lag = self._check_lag(lag)
        if self._dense:
            return self.surface(lag)[a, :]
        x = self._x
        return x[lag:, a] @ x[: self.m - lag] / self._divisor(lag)

    def variance(self) -> np.ndarray:
        """Diagonal of the lag-0 surface."""
        if self._dense:
            return np.diag(self.surface(0)).copy()
        return np.einsum("ij,ij->j", self._x, self._x) / self.m

    def value(self, lag: int, a: int, b: int) -> float:
        lag = self._check_lag(lag)
        if self._dense:
            return float(self.surface(lag)[a, b])
        x = self._x
        return float(x[lag:, a] @ x[: self.m - lag, b] / self._divisor(lag))


def estimate(series: FunctionalSeries, q: int = 1) -> LaggedCovariances:
    """Estimate lagged covariance surfaces of orders ``0..q``."""
    if not series.centered:
        raise InvalidArgumentError("covariances are estimated from a centered series")
    if int(q) != q or q < 1:
        raise InvalidArgumentError(f"order q must be a positive integer, got {q!r}")
    if series.m <= q:
        raise InsufficientSampleError(f"m={series.m} curves cannot support order q={q}")
    return LaggedCovariances(series, q)


def candidate_cov(cov: LaggedCovariances, a: Candidate, b: Candidate) -> float:
    """Covariance of X_{n-a.lag}(a) and X_{n-b.lag}(b)."""
    for c in (a, b):
        if c.lag > cov.q:
            raise InvalidArgumentError(f"candidate lag {c.lag} exceeds the estimated order {cov.q}")
    if a.lag <= b.lag:
        return cov.value(b.lag - a.lag, a.index, b.index)
    return cov.value(a.lag - b.lag, b.index, a.index)


def cov_matrix(cov: LaggedCovariances, points: PointSet) -> np.ndarray:
    p = len(points)
    out = np.empty((p, p))
    for i, a in enumerate(points):
        for j in range(i, p):
            out[i, j] = out[j, i] = candidate_cov(cov, a, points[j])
    return out


def cross_cov_matrix(cov: LaggedCovariances, points: PointSet) -> np.ndarray:
    """G x p matrix whose column j is ``s -> c_{lag_j}(s, t_j)``."""
    out = np.empty((cov.n_points, len(points)))
    for j, c in enumerate(points):
        if c.lag > cov.q:
            raise InvalidArgumentError(f"candidate lag {c.lag} exceeds the estimated order {cov.q}")
        out[:, j] = cov.column(c.lag, c.index)
    return out


def cholesky(a, tol: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Lower Cholesky factor of a symmetric matrix, with its pivots.

    Pivots are the Schur complements ``d_k`` (so ``L[k, k] = sqrt(d_k)``).
    Raises :class:`SingularMatrixError` when a pivot is not above `tol`;
    the default tolerance is ``1e-10 * max(diag)``.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError("expected a square matrix")
    if not np.allclose(a, a.T, rtol=1e-10, atol=1e-14 * max(1.0, np.abs(a).max(initial=0.0))):
        raise InvalidArgumentError("matrix is not symmetric")
    n = a.shape[0]
    if tol is None:
        tol = 1e-10 * max(float(np.max(np.diag(a), initial=0.0)), 0.0)
    lower = np.zeros_like(a)
    pivots = np.empty(n)
    for k in range(n):
        d = a[k, k] - lower[k, :k] @ lower[k, :k]
        pivots[k] = d
        if not d > tol:
            raise SingularMatrixError(
                f"pivot {d:.3e} at column {k} is below tolerance {tol:.3e}", pivot=d, index=k
            )
        lower[k, k] = np.sqrt(d)
        lower[k + 1 :, k] = (a[k + 1 :, k] - lower[k + 1 :, :k] @ lower[k, :k]) / lower[k, k]
    return lower, pivots


def _forward(lower, b):
    y = np.empty_like(b)
    for k in range(lower.shape[0]):
        y[k] = (b[k] - lower[k, :k] @ y[:k]) / lower[k, k]
    return y


def _backward(lower, y):
    x = np.empty_like(y)
    for k in range(lower.shape[0] - 1, -1, -1):
        x[k] = (y[k] - lower[k + 1 :, k] @ x[k + 1 :]) / lower[k, k]
    return x


def solve_spd(a, b, tol: float | None = None) -> tuple[np.ndarray, float]:
    """Solve ``a x = b`` for symmetric positive definite `a`.

    Returns
    -------
    x : ndarray
        Solution with the shape of `b` (vector or matrix of right-hand sides).
    min_pivot : float
        Smallest Cholesky pivot encountered.
    """
    lower, pivots = cholesky(a, tol)
    b = np.asarray(b, dtype=float)
    if b.shape[:1] != (lower.shape[0],):
        raise InvalidArgumentError("right-hand side does not match the matrix")
    x = _backward(lower, _forward(lower, b))
    return x, float(pivots.min(initial=np.inf))


def regression_coefficients(cov: LaggedCovariances, points: PointSet) -> np.ndarray:
    """G x p matrix of best linear coefficient functions on `points`.

    Column j is alpha_j(.) in ``x_n(s) ~ sum_j alpha_j(s) x_{n-lag_j}(t_j)``.
    """
    sol, _ = solve_spd(cov_matrix(cov, points), cross_cov_matrix(cov, points).T)
    return np.ascontiguousarray(sol.T)

"""Grids, curve containers, centering and grid quadrature."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import InvalidArgumentError

__all__ = [
    "Grid",
    "FunctionalSeries",
    "Candidate",
    "PointSet",
    "make_uniform_grid",
    "center",
    "trapz",
    "trapz_weights",
]


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Grid:
    """Sorted evaluation abscissas in [0, 1] shared by all curves.

    Parameters
    ----------
    points : array_like
        Strictly increasing abscissas, at least two, inside [0, 1].
    """

    points: np.ndarray

    def __post_init__(self):
        pts = _frozen_array(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidArgumentError("a grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise InvalidArgumentError("grid points must be finite")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise InvalidArgumentError("grid points must lie in [0, 1]")
        if np.any(np.diff(pts) <= 0.0):
            raise InvalidArgumentError("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Grid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    @property
    def step(self) -> float:
        """Smallest gap between adjacent points."""
        return float(np.min(np.diff(self.points)))

    @property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights, so that ``trapz(f) == weights @ f``."""
        return trapz_weights(self.points)

    def index_of(self, value: float, tol: float = 1e-9) -> int:
        """Index of the grid point equal to `value` (within `tol`)."""
        idx = int(np.argmin(np.abs(self.points - value)))
        if abs(self.points[idx] - value) > tol:
            raise InvalidArgumentError(f"{value!r} is not a grid point")
        return idx


def make_uniform_grid(n: int) -> Grid:
    """Return the ``n`` equispaced points ``0, 1/(n-1), ..., 1``."""
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"uniform grid needs n >= 2, got {n!r}")
    return Grid(np.linspace(0.0, 1.0, int(n)))


def trapz_weights(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    gaps = np.diff(pts)
    w = np.zeros_like(pts)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    return w


def trapz(f, grid: Grid | Sequence[float]) -> float | np.ndarray:
    """Composite trapezoidal rule of `f` over `grid`.

    `f` may be a single vector or a stack of vectors; integration runs over
    the last axis, which must have the grid's length.
    """
    pts = grid.points if isinstance(grid, Grid) else np.asarray(grid, dtype=float)
    f = np.asarray(f, dtype=float)
    if f.shape[-1:] != pts.shape:
        raise InvalidArgumentError(
            f"integrand has length {f.shape[-1] if f.ndim else 0}, grid has {pts.size}"
        )
    out = f @ trapz_weights(pts)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class FunctionalSeries:
    """An ordered collection of curves sampled on a common grid.

    Row ``i`` of `values` is curve ``x_i`` evaluated on `grid`; the last row
    is the most recent curve.
    """

    grid: Grid
    values: np.ndarray
    centered: bool = False
    mean_curve: np.ndarray | None = None

    def __post_init__(self):
        vals = _frozen_array(self.values)
        if vals.ndim != 2:
            raise InvalidArgumentError("values must be an m x G matrix")
        if vals.shape[1] != len(self.grid):
            raise InvalidArgumentError(
                f"curves have {vals.shape[1]} columns but the grid has {len(self.grid)} points"
            )
        if vals.shape[0] < 2:
            raise InvalidArgumentError("a functional series needs at least two curves")
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("curve values must be finite")
        object.__setattr__(self, "values", vals)
        if self.mean_curve is not None:
            mc = _frozen_array(self.mean_curve)
            if mc.shape != (len(self.grid),):
                raise InvalidArgumentError("mean curve length differs from the grid")
            object.__setattr__(self, "mean_curve", mc)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n_points(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.m

    def slice(self, start: int, stop: int) -> "FunctionalSeries":
        """Raw (uncentered view) curves ``start .. stop-1`` on the same grid."""
        return FunctionalSeries(self.grid, self.values[start:stop], self.centered, self.mean_curve)


def center(series: FunctionalSeries) -> tuple[FunctionalSeries, np.ndarray]:
    """Subtract the pointwise sample mean curve from every row.

    Re-centering an already centered series removes its residual
    (round-off) mean and accumulates it into the stored mean curve, so the
    operation is idempotent on its output.
    """
    mean = series.values.mean(axis=0)
    centered = series.values - mean
    total = mean if series.mean_curve is None or not series.centered else series.mean_curve + mean
    return FunctionalSeries(series.grid, centered, True, total), total


@dataclass(frozen=True, order=True)
class Candidate:
    """A (lag, grid point) pair; lag 1 refers to the previous curve."""

    lag: int
    index: int
    abscissa: float = field(compare=False)

    def __post_init__(self):
        if int(self.lag) != self.lag or self.lag < 1:
            raise InvalidArgumentError(f"candidate lag must be >= 1, got {self.lag!r}")
        if self.index < 0:
            raise InvalidArgumentError("candidate grid index must be nonnegative")

    @classmethod
    def on(cls, grid: Grid, lag: int, index: int) -> "Candidate":
        if not 0 <= index < len(grid):
            raise InvalidArgumentError(f"grid index {index} outside a grid of {len(grid)} points")
        return cls(int(lag), int(index), float(grid.points[index]))

    @classmethod
    def at(cls, grid: Grid, lag: int, abscissa: float) -> "Candidate":
        return cls.on(grid, lag, grid.index_of(abscissa))


@dataclass(frozen=True)
class PointSet:
    """An ordered, separation-constrained collection of candidates.

    Within one lag, any two abscissas are at least `delta` apart.
    """

    candidates: tuple[Candidate, ...] = ()
    delta: float = 0.0

    def __post_init__(self):
        cands = tuple(self.candidates)
        object.__setattr__(self, "candidates", cands)
        keys = [(c.lag, c.index) for c in cands]
        if len(set(keys)) != len(keys):
            raise InvalidArgumentError("point set contains a repeated (lag, abscissa) pair")
        for lag in {c.lag for c in cands}:
            ts = np.sort([c.abscissa for c in cands if c.lag == lag])
            if ts.size > 1 and np.min(np.diff(ts)) < self.delta * (1.0 - 1e-9):
                raise InvalidArgumentError(f"points of lag {lag} are closer than delta={self.delta}")

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return PointSet(self.candidates[i], self.delta)
        return self.candidates[i]

    def added(self, cand: Candidate) -> "PointSet":
        return PointSet(self.candidates + (cand,), self.delta)

    @property
    def lags(self) -> np.ndarray:
        return np.array([c.lag for c in self.candidates], dtype=int)

    @property
    def indices(self) -> np.ndarray:
        return np.array([c.index for c in self.candidates], dtype=int)

    @property
    def abscissas(self) -> np.ndarray:
        return np.array([c.abscissa for c in self.candidates], dtype=float)

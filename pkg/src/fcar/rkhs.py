"""Exact RKHS arithmetic for the Brownian kernel ``min(s, t)``.

Its RKHS holds the absolutely continuous f with f(0) = 0 and square
integrable derivative, with ``<f, g> = int f'(s) g'(s) ds``. Sections
``min(t, .)`` are piecewise linear, so for piecewise-linear functions whose
kinks lie on the grid every quantity below is exact up to round-off.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import Grid, make_uniform_grid
from .covariance import solve_spd
from .exceptions import InvalidArgumentError, NotInRKHSError, SingularMatrixError
from .selection import GreedyState

__all__ = [
    "PLFunction",
    "KernelSurface",
    "KERNELS",
    "get_kernel",
    "h_inner",
    "h_norm_sq",
    "min_section",
    "project",
    "Projection",
    "DistanceProfile",
    "distance_profile",
]

SAMPLE_POINTS = 1001


@dataclass(frozen=True, eq=False)
class PLFunction:
    """Continuous piecewise-linear interpolant of `values` on `grid`.

    The grid must start at 0.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.grid),):
            raise InvalidArgumentError("values must match the grid")
        if self.grid.points[0] != 0.0:
            raise InvalidArgumentError("piecewise-linear RKHS functions need a grid starting at 0")
        object.__setattr__(self, "values", vals)

    def __call__(self, t):
        return np.interp(t, self.grid.points, self.values)

    def __sub__(self, other: "PLFunction") -> "PLFunction":
        grid, a, b = _common(self, other)
        return PLFunction(grid, a - b)

    def on(self, grid: Grid) -> "PLFunction":
        return PLFunction(grid, self(grid.points))


def min_section(t: float, grid: Grid) -> PLFunction:
    """Kernel section ``min(t, .)`` sampled on `grid` (exact if t is a grid point)."""
    return PLFunction(grid, np.minimum(grid.points, t))


def _common(f: PLFunction, g: PLFunction):
    if f.grid == g.grid:
        return f.grid, f.values, g.values
    grid = Grid(np.union1d(f.grid.points, g.grid.points))
    return grid, f(grid.points), g(grid.points)


def h_inner(f: PLFunction, g: PLFunction) -> float:
    """RKHS inner product: integral of the product of the derivatives.

    Functions on different grids are compared on the union grid, where both
    stay exactly piecewise linear.
    """
    for h in (f, g):
        if h.values[0] != 0.0:
            raise NotInRKHSError(f"function value at 0 is {h.values[0]!r}, not 0")
    grid, a, b = _common(f, g)
    return float(np.sum(np.diff(a) * np.diff(b) / np.diff(grid.points)))


def h_norm_sq(f: PLFunction) -> float:
    return h_inner(f, f)


@dataclass(frozen=True)
class KernelSurface:
    """A two-argument function ``phi(s, t)``, vectorized by broadcasting."""

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, s, t):
        return self.evaluator(np.asarray(s, dtype=float), np.asarray(t, dtype=float))

    def section(self, s: float, grid: Grid) -> PLFunction:
        """``phi(s, .)`` as a piecewise-linear function on `grid`."""
        vals = np.broadcast_to(self(s, grid.points), grid.points.shape)
        if abs(vals[0]) > 1e-12:
            raise NotInRKHSError(f"kernel {self.name} has phi(s, 0) = {vals[0]!r}")
        vals = vals.copy()
        vals[0] = 0.0
        return PLFunction(grid, vals)


def _sparse_log(s, t):
    s, t = np.broadcast_arrays(s, t)
    out = np.zeros(np.broadcast(s, t).shape)
    for j, tj in enumerate((0.3, 0.5, 0.9), start=1):
        out = out + np.log((1.0 + s) / j) * np.minimum(tj, t)
    return out


KERNELS: dict[str, KernelSurface] = {
    "phi1": KernelSurface("phi1", lambda s, t: np.cos(2 * np.pi * s) * np.sin(2 * np.pi * t)),
    "phi2": KernelSurface("phi2", lambda s, t: np.sin(2 * np.pi * s * t)),
    "phi3": KernelSurface("phi3", lambda s, t: -np.log(5.0 * s * t + 1.0)),
    "sparse-log": KernelSurface("sparse-log", _sparse_log),
}


def get_kernel(name: str) -> KernelSurface:
    try:
        return KERNELS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown kernel {name!r}; choose from {', '.join(KERNELS)}") from None


class Projection(NamedTuple):
    coefficients: np.ndarray
    sq_distance: float
    norm_sq: float


def project(phi: KernelSurface, s: float, points, sample_grid: Grid | None = None) -> Projection:
    """Project ``phi(s, .)`` onto ``span{min(t_j, .)}``.

    Coefficients solve ``Sigma a = phi(s, T)`` with ``Sigma[i, j] = min(t_i, t_j)``.
    ``phi(s, .)`` is taken as its piecewise-linear sampling on `sample_grid`
    refined by the points. The squared distance equals
    ``||phi(s,.)||^2 - phi(s,T)' a``; it is evaluated as the norm of the
    explicit residual, which avoids cancellation when the distance is tiny.
    """
    t = np.asarray(points, dtype=float).ravel()
    if t.size == 0:
        raise InvalidArgumentError("need at least one projection point")
    if np.any(t <= 0.0) or np.any(t > 1.0):
        raise InvalidArgumentError("projection points must lie in (0, 1]")
    if np.unique(t).size != t.size:
        raise SingularMatrixError("repeated projection points", pivot=0.0)
    base = sample_grid or make_uniform_grid(SAMPLE_POINTS)
    grid = Grid(np.union1d(base.points, t))
    section = phi.section(s, grid)
    rhs = np.broadcast_to(phi(s, t), t.shape).astype(float)
    a, _ = solve_spd(np.minimum.outer(t, t), rhs)
    fitted = np.minimum.outer(grid.points, t) @ a
    resid = PLFunction(grid, section.values - fitted)
    return Projection(a, max(h_norm_sq(resid), 0.0), h_norm_sq(section))


@dataclass(frozen=True, eq=False)
class DistanceProfile:
    """RKHS distances ``||phi(s,.) - phi_p(s,.)||`` for p = 1..p_max.

    `distances[i, p-1]` belongs to abscissa ``s[i]``; `designs[p-1]` holds
    the points used for p.
    """

    kernel: str
    design: str
    s: np.ndarray
    designs: tuple[np.ndarray, ...]
    distances: np.ndarray


def _greedy_design(phi: KernelSurface, s_grid: Grid, t_grid: Grid, p_max: int) -> list[float]:
    cand = t_grid.points[t_grid.points > 0]
    response = phi(s_grid.points[:, None], cand[None, :])
    state = GreedyState(
        response,
        s_grid.weights,
        cand.copy(),
        lambda j: np.minimum(cand, cand[j]),
        np.ones(cand.size, dtype=int),
        cand,
        delta=0.0,
    )
    chosen = []
    for _ in range(p_max):
        k, gain, _ = state.best()
        if k < 0 or not gain > 0.0:
            break
        state.add(k)
        chosen.append(float(cand[k]))
    return chosen


def _quantile_design(t_grid: Grid, p: int) -> np.ndarray:
    targets = np.arange(1, p + 1) / p
    idx = np.abs(t_grid.points[None, :] - targets[:, None]).argmin(axis=1)
    return np.unique(t_grid.points[idx])


def distance_profile(
    phi: KernelSurface | str,
    p_max: int,
    design: str = "greedy",
    s_points: int = 101,
    sample_points: int = SAMPLE_POINTS,
) -> DistanceProfile:
    """Approximation error of ``phi(s, .)`` by p kernel sections, for each s.

    Parameters
    ----------
    design : {"greedy", "quantile"}
        ``greedy`` picks nested points maximizing the integrated projected
        norm (the selection criterion with ``phi`` as the lagged covariance);
        ``quantile`` uses the uniform quantiles ``k/p`` snapped to the
        sampling grid.
    """
    if isinstance(phi, str):
        phi = get_kernel(phi)
    if int(p_max) != p_max or p_max < 1:
        raise InvalidArgumentError("p_max must be a positive integer")
    s_grid = make_uniform_grid(s_points)
    t_grid = make_uniform_grid(sample_points)
    if design == "greedy":
        path = _greedy_design(phi, s_grid, t_grid, p_max)
        designs = [np.array(path[: min(p, len(path))]) for p in range(1, p_max + 1)]
    elif design == "quantile":
        designs = [_quantile_design(t_grid, p) for p in range(1, p_max + 1)]
    else:
        raise InvalidArgumentError(f"unknown design {design!r}; use greedy or quantile")
    dist = np.empty((s_grid.points.size, p_max))
    for i, s in enumerate(s_grid.points):
        for p, pts in enumerate(designs):
            dist[i, p] = np.sqrt(project(phi, s, pts, t_grid).sq_distance)
    return DistanceProfile(phi.name, design, s_grid.points.copy(), tuple(designs), dist)

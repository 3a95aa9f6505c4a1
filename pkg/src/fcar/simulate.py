"""Simulated functional time series and a stability diagnostic.

Families
--------
sparse-log, sparse-sin
    ``X_n(s) = sum_j alpha_j(s) X_{n-1}(t_j) + B_n(s)`` with three points and
    standard Brownian innovations.
ou
    Consecutive unit segments of one stationary Ornstein-Uhlenbeck path.
far
    Functional AR(1) in a Fourier basis with a random coefficient matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Candidate, FunctionalSeries, Grid, PointSet, make_uniform_grid
from .exceptions import InstabilityError, InvalidArgumentError

__all__ = [
    "FAMILIES",
    "SimConfig",
    "TrueKernel",
    "FARParameters",
    "brownian_curves",
    "gen_sparse",
    "gen_ou",
    "gen_far",
    "simulate",
    "sparse_coefficients",
    "fourier_basis",
    "operator_norm_rho",
]

FAMILIES = ("sparse-log", "sparse-sin", "ou", "far")
DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class SimConfig:
    family: str
    m: int
    grid: Grid = field(default_factory=lambda: make_uniform_grid(101))
    burn_in: int = 100
    seed: int | None = 0
    theta: float = 1.0
    t_star: tuple[float, ...] = (0.3, 0.5, 0.9)
    D: int = 15
    operator_scale: float = 0.8
    coef_scale: float = 1.0
    far_operator: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgumentError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if isinstance(self.grid, (int, np.integer)):
            object.__setattr__(self, "grid", make_uniform_grid(int(self.grid)))
        if self.m < 2:
            raise InvalidArgumentError("m must be >= 2")
        if self.family != "ou" and self.burn_in < 50:
            raise InvalidArgumentError("burn_in must be >= 50 for sparse and far families")
        if not self.theta > 0:
            raise InvalidArgumentError("theta must be positive")
        if self.D < 2:
            raise InvalidArgumentError("D must be >= 2")
        if self.far_operator is None and not 0 < self.operator_scale < 1:
            raise InvalidArgumentError("operator_scale must lie in (0, 1)")
        object.__setattr__(self, "t_star", tuple(float(t) for t in self.t_star))

    def replace(self, **changes) -> "SimConfig":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TrueKernel:
    """Generating operator ``f -> sum_j alpha_j(.) f_{lag_j}(t_j)`` of a simulation."""

    grid: Grid
    alpha: np.ndarray
    points: PointSet
    family: str
    params: dict = field(default_factory=dict)

    def apply(self, recent) -> np.ndarray:
        """Image of the past curves (most recent first, or one curve)."""
        x = np.asarray(recent, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != len(self.grid):
            raise InvalidArgumentError("curve does not match the kernel grid")
        return self.alpha @ x[self.points.lags - 1, self.points.indices]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "grid": self.grid.points.tolist(),
            "points": [{"lag": c.lag, "index": c.index, "abscissa": c.abscissa} for c in self.points],
            "alpha": self.alpha.T.tolist(),
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrueKernel":
        grid = Grid(doc["grid"])
        pts = PointSet(tuple(Candidate.on(grid, c["lag"], c["index"]) for c in doc["points"]))
        alpha = np.array(doc["alpha"], dtype=float).reshape(len(pts), len(grid)).T
        return cls(grid, np.ascontiguousarray(alpha), pts, doc["family"], dict(doc.get("params", {})))


@dataclass(frozen=True, eq=False)
class FARParameters:
    """Ground truth of a FAR simulation (coefficients are post burn-in)."""

    psi: np.ndarray
    noise_variances: np.ndarray
    basis: np.ndarray
    coefficients: np.ndarray


def sparse_coefficients(family: str, s, n_points: int = 3) -> np.ndarray:
    """Coefficient functions ``alpha_j(s)``, j = 1..n_points, as columns."""
    s = np.asarray(s, dtype=float)[:, None]
    j = np.arange(1, n_points + 1)[None, :]
    if family == "sparse-log":
        return np.log((1.0 + s) / j)
    if family == "sparse-sin":
        return np.sin(30.0 * np.pi * s / j)
    raise InvalidArgumentError(f"{family!r} is not a sparse family")


def brownian_curves(rng: np.random.Generator, grid: Grid, n: int) -> np.ndarray:
    """`n` independent standard Brownian motions sampled on `grid`."""
    gaps = np.diff(grid.points, prepend=0.0)
    return np.cumsum(rng.standard_normal((n, len(grid))) * np.sqrt(gaps), axis=1)


def gen_sparse(config: SimConfig) -> tuple[FunctionalSeries, TrueKernel]:
    grid = config.grid
    idx = np.array([grid.index_of(t) for t in config.t_star])
    alpha = config.coef_scale * sparse_coefficients(config.family, grid.points, len(idx))
    rng = np.random.default_rng(config.seed)
    total = config.burn_in + config.m
    noise = brownian_curves(rng, grid, total)
    out = np.empty((total, len(grid)))
    prev = np.zeros(len(grid))
    for n in range(total):
        prev = alpha @ prev[idx] + noise[n]
        if not np.max(np.abs(prev)) <= DIVERGENCE_LIMIT:
            raise InstabilityError(f"{config.family} recursion diverged at curve {n}")
        out[n] = prev
    points = PointSet(tuple(Candidate.on(grid, 1, int(i)) for i in idx))
    kernel = TrueKernel(grid, alpha, points, config.family, {"t_star": list(config.t_star), "coef_scale": config.coef_scale})
    return FunctionalSeries(grid, out[config.burn_in :]), kernel


def gen_ou(config: SimConfig) -> tuple[FunctionalSeries, TrueKernel]:
    """Exact simulation of ``X_n(s) = Z(n + s)`` for a stationary O.U. path ``Z``.

    The path starts from its stationary law, so no burn-in is applied.
    Adjacent curves share their boundary value: ``x_n(1) == x_{n+1}(0)``.
    """
    grid = config.grid
    pts = grid.points
    if pts[0] != 0.0 or pts[-1] != 1.0:
        raise InvalidArgumentError("the O.U. family needs a grid spanning exactly [0, 1]")
    theta = config.theta
    rng = np.random.default_rng(config.seed)
    decay = np.exp(-theta * np.diff(pts))
    scale = np.sqrt((1.0 - decay**2) / (2.0 * theta))
    cum = np.cumprod(decay)
    out = np.empty((config.m, len(grid)))
    z0 = rng.normal(0.0, np.sqrt(0.5 / theta))
    for n in range(config.m):
        eps = rng.standard_normal(pts.size - 1) * scale
        out[n, 0] = z0
        out[n, 1:] = cum * (z0 + np.cumsum(eps / cum))
        z0 = out[n, -1]
    alpha = np.exp(-theta * pts)[:, None]
    points = PointSet((Candidate.on(grid, 1, len(grid) - 1),))
    return FunctionalSeries(grid, out), TrueKernel(grid, alpha, points, "ou", {"theta": theta})


def fourier_basis(grid: Grid, D: int) -> np.ndarray:
    """First `D` orthonormal Fourier functions on [0, 1], shape (D, G)."""
    s = grid.points
    rows = [np.ones_like(s)]
    k = 1
    while len(rows) < D:
        rows.append(np.sqrt(2.0) * np.sin(2 * np.pi * k * s))
        if len(rows) < D:
            rows.append(np.sqrt(2.0) * np.cos(2 * np.pi * k * s))
        k += 1
    return np.array(rows)


def gen_far(config: SimConfig) -> tuple[FunctionalSeries, FARParameters]:
    """FAR(1) curves ``sum_j xi_{n,j} f_j`` with ``xi_n = Psi xi_{n-1} + eta_n``.

    Innovation variances decay linearly, ``(D - j + 1) / D``. Unless
    `config.far_operator` is given, ``Psi`` is a Gaussian matrix rescaled to
    spectral radius `config.operator_scale`.
    """
    D = config.D
    rng = np.random.default_rng(config.seed)
    if config.far_operator is not None:
        psi = np.array(config.far_operator, dtype=float)
        if psi.shape != (D, D):
            raise InvalidArgumentError(f"far_operator must be {D}x{D}")
    else:
        psi = rng.standard_normal((D, D))
        psi *= config.operator_scale / np.max(np.abs(np.linalg.eigvals(psi)))
    lam = (D - np.arange(D)) / D
    total = config.burn_in + config.m
    eta = rng.standard_normal((total, D)) * np.sqrt(lam)
    xi = np.empty((total, D))
    prev = np.zeros(D)
    for n in range(total):
        prev = psi @ prev + eta[n]
        xi[n] = prev
    xi = xi[config.burn_in :]
    basis = fourier_basis(config.grid, D)
    return FunctionalSeries(config.grid, xi @ basis), FARParameters(psi, lam, basis, xi)


def simulate(config: SimConfig):
    """Dispatch on `config.family`; returns ``(series, truth)``."""
    if config.family == "ou":
        return gen_ou(config)
    if config.family == "far":
        return gen_far(config)
    return gen_sparse(config)


def operator_norm_rho(alpha, points: PointSet, power: int = 1) -> float:
    """Sup-norm operator norm of ``rho**power`` for ``rho f = sum_k alpha_k f(t_k)``.

    Powers stay in the same finite form, ``rho**j f = sum_k beta_k f(t_k)`` with
    ``beta = alpha A**(j-1)`` and ``A[k, l] = alpha_l(t_k)``; the norm is
    ``sup_s sum_k |beta_k(s)|`` over the grid (exact for distinct points).
    """
    alpha = np.asarray(alpha, dtype=float)
    if alpha.ndim != 2 or alpha.shape[1] != len(points):
        raise InvalidArgumentError("alpha must have one column per point")
    if power < 1:
        raise InvalidArgumentError("power must be >= 1")
    if np.any(points.lags != 1):
        raise InvalidArgumentError("operator norms are defined for lag-1 point sets")
    a = alpha[points.indices, :]
    beta = alpha @ np.linalg.matrix_power(a, power - 1)
    return float(np.max(np.sum(np.abs(beta), axis=1)))

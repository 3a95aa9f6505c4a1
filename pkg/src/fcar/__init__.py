"""Forecasting functional time series from a few selected points of past curves.

The model writes each curve as ``x_n(s) = sum_j alpha_j(s) x_{n-lag_j}(t_j) + e_n(s)``
and chooses the points ``(lag_j, t_j)`` greedily from sample lagged covariances.
"""

from ._backend import BACKEND
from .core import Candidate, FunctionalSeries, Grid, PointSet, center, make_uniform_grid, trapz
from .covariance import (
    LaggedCovariances,
    candidate_cov,
    cov_matrix,
    cross_cov_matrix,
    estimate,
    regression_coefficients,
    solve_spd,
)
from .evaluation import (
    ErrorReport,
    WindowScheme,
    benchmark,
    curve_norm,
    make_windows,
    relative_errors,
)
from .exceptions import (
    DataError,
    FCARError,
    InstabilityError,
    InsufficientSampleError,
    InvalidArgumentError,
    NotInRKHSError,
    NumericalError,
    SelectionExhaustedError,
    SingularMatrixError,
    UnsupportedError,
)
from .forecast import (
    FCARModel,
    exact_predict,
    fit,
    forecast,
    load_model,
    naive_predict,
    predict,
    save_model,
)
from .rkhs import KERNELS, KernelSurface, PLFunction, distance_profile, h_inner, project
from .selection import (
    SelectionTrace,
    estimate_p_cv,
    estimate_p_kmeans,
    greedy_step,
    initial_scores,
    kmeans2,
    qhat0_direct,
    select_points,
)
from .simulate import SimConfig, TrueKernel, gen_far, gen_ou, gen_sparse, operator_norm_rho, simulate

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "benchmark",
    "Candidate",
    "candidate_cov",
    "center",
    "cov_matrix",
    "cross_cov_matrix",
    "curve_norm",
    "DataError",
    "distance_profile",
    "ErrorReport",
    "estimate",
    "estimate_p_cv",
    "estimate_p_kmeans",
    "exact_predict",
    "FCARError",
    "FCARModel",
    "fit",
    "forecast",
    "FunctionalSeries",
    "gen_far",
    "gen_ou",
    "gen_sparse",
    "greedy_step",
    "Grid",
    "h_inner",
    "initial_scores",
    "InstabilityError",
    "InsufficientSampleError",
    "InvalidArgumentError",
    "KERNELS",
    "KernelSurface",
    "kmeans2",
    "LaggedCovariances",
    "load_model",
    "make_uniform_grid",
    "make_windows",
    "naive_predict",
    "NotInRKHSError",
    "NumericalError",
    "operator_norm_rho",
    "PLFunction",
    "PointSet",
    "predict",
    "project",
    "qhat0_direct",
    "regression_coefficients",
    "relative_errors",
    "save_model",
    "select_points",
    "SelectionExhaustedError",
    "SelectionTrace",
    "SimConfig",
    "simulate",
    "SingularMatrixError",
    "solve_spd",
    "trapz",
    "TrueKernel",
    "UnsupportedError",
    "WindowScheme",
]

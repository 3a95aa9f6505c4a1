"""Window-based benchmarking of forecasting methods."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import FunctionalSeries, Grid, trapz
from .exceptions import InvalidArgumentError, UnsupportedError
from .forecast import exact_predict, fit, naive_predict, predict
from .selection import DEFAULT_P_MAX
from .simulate import SimConfig, TrueKernel, simulate

__all__ = [
    "METHODS",
    "NORMS",
    "WindowScheme",
    "ErrorReport",
    "make_windows",
    "curve_norm",
    "relative_errors",
    "benchmark",
]

METHODS = ("rkhs-kmeans", "rkhs-cv", "naive", "exact")
NORMS = ("L2", "sup")
METRICS = ("e1", "e2")


@dataclass(frozen=True)
class WindowScheme:
    """Train/test windows; window ``k`` trains on ``[start, start+train)``."""

    n_blocks: int
    train_size: int
    test_size: int
    starts: tuple[int, ...]

    @property
    def width(self) -> int:
        return self.train_size + self.test_size

    def windows(self):
        for o in self.starts:
            yield range(o, o + self.train_size), range(o + self.train_size, o + self.width)


def make_windows(m: int, n_blocks: int, train: int, test: int) -> WindowScheme:
    """Evenly spaced (possibly overlapping) windows, the last one ending at `m`."""
    if n_blocks < 1:
        raise InvalidArgumentError("n_blocks must be >= 1")
    if train < 1 or test < 1:
        raise InvalidArgumentError("train and test sizes must be >= 1")
    if train + test > m:
        raise InvalidArgumentError(f"a window of {train}+{test} curves does not fit in {m}")
    last = m - train - test
    if n_blocks == 1:
        starts = (last,)
    else:
        starts = tuple(int(round(v)) for v in np.linspace(0, last, n_blocks))
    return WindowScheme(n_blocks, train, test, starts)


def curve_norm(x, grid: Grid, which: str = "L2") -> float:
    """L2[0,1] norm (trapezoid rule) or sup norm over the grid."""
    x = np.asarray(x, dtype=float)
    if which == "L2":
        return float(np.sqrt(max(trapz(x * x, grid), 0.0)))
    if which == "sup":
        return float(np.max(np.abs(x)))
    raise InvalidArgumentError(f"unknown norm {which!r}")


def relative_errors(truth, preds, grid: Grid, which: str = "L2") -> tuple[float, float]:
    """Relative errors of a set of forecasts.

    Returns ``e1``, the mean over curves of ``||x - xhat|| / ||x||``, and
    ``e2 = sum ||x - xhat|| / sum ||x||``.
    """
    truth = np.atleast_2d(np.asarray(truth, dtype=float))
    preds = np.atleast_2d(np.asarray(preds, dtype=float))
    if truth.shape != preds.shape:
        raise InvalidArgumentError(f"truth {truth.shape} and predictions {preds.shape} differ")
    num = np.array([curve_norm(x - y, grid, which) for x, y in zip(truth, preds)])
    den = np.array([curve_norm(x, grid, which) for x in truth])
    zero = np.flatnonzero(den == 0.0)
    if zero.size:
        raise InvalidArgumentError(f"test curve {int(zero[0])} has zero {which} norm")
    return float(np.mean(num / den)), float(num.sum() / den.sum())


@dataclass
class ErrorReport:
    """Mean errors per (method, norm, metric) and mean seconds per window."""

    errors: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    n_windows: int = 0
    p_hats: dict = field(default_factory=dict)

    @property
    def methods(self) -> list[str]:
        return list(self.timing)

    def get(self, method: str, norm: str = "L2", metric: str = "e1") -> float:
        return self.errors[(method, norm, metric)]

    def to_csv(self) -> str:
        cols = [f"{n}_{e}" for n in NORMS for e in METRICS]
        lines = ["method," + ",".join(cols)]
        for mth in self.methods:
            vals = [repr(self.errors[(mth, n, e)]) for n in NORMS for e in METRICS]
            lines.append(",".join([mth] + vals))
        return "\n".join(lines) + "\n"

    def timing_csv(self) -> str:
        lines = ["method,seconds_per_window"]
        lines += [f"{m},{self.timing[m]!r}" for m in self.methods]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "n_windows": self.n_windows,
            "errors": {
                m: {f"{n}_{e}": self.errors[(m, n, e)] for n in NORMS for e in METRICS} for m in self.methods
            },
            "timing": dict(self.timing),
            "p_hat": {m: list(v) for m, v in self.p_hats.items()},
        }


def _one_series(values, grid, kernel, methods, scheme, q, p_max, delta, folds):
    records = []  # (method, {(norm, metric): value}, seconds, p_hat)
    max_lag = q if kernel is None else max(q, int(np.max(kernel.points.lags)))
    for train_idx, test_idx in scheme.windows():
        if test_idx.start < max_lag:
            raise InvalidArgumentError("windows leave no room for the lagged inputs")
        truth = values[test_idx.start : test_idx.stop]
        for method in methods:
            t0 = time.perf_counter()
            p_hat = None
            if method.startswith("rkhs"):
                train = FunctionalSeries(grid, values[train_idx.start : train_idx.stop])
                model = fit(train, q, method.split("-", 1)[1], p_max, delta, folds)
                p_hat = model.p_hat
                preds = [predict(model, values[i - 1 :: -1][:q]) for i in test_idx]
            elif method == "naive":
                preds = [naive_predict(values[i - 1]) for i in test_idx]
            else:
                preds = [exact_predict(kernel, values[i - 1 :: -1][:max_lag]) for i in test_idx]
            elapsed = time.perf_counter() - t0
            errs = {}
            for norm in NORMS:
                errs[(norm, "e1")], errs[(norm, "e2")] = relative_errors(truth, np.array(preds), grid, norm)
            records.append((method, errs, elapsed, p_hat))
    return records


def benchmark(
    source,
    methods=("rkhs-kmeans", "naive"),
    scheme: WindowScheme | None = None,
    q: int = 1,
    p_max: int = DEFAULT_P_MAX,
    reps: int = 1,
    kernel: TrueKernel | None = None,
    delta: float | None = None,
    folds: int = 5,
    threads: int = 1,
) -> ErrorReport:
    """Fit and forecast over every window and replication.

    Parameters
    ----------
    source : FunctionalSeries or SimConfig
        Data, or a simulation recipe; replication ``r`` uses seed
        ``config.seed + r``.
    scheme : WindowScheme, optional
        Defaults to a single window with 15 test curves.
    kernel : TrueKernel, optional
        Generating operator for the ``exact`` method on a fixed series.
    threads : int
        Replications run concurrently on this many threads (0 = one per CPU).
    """
    methods = tuple(methods)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise InvalidArgumentError(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
    if isinstance(source, SimConfig):
        m = source.m
    elif isinstance(source, FunctionalSeries):
        m = source.m
        if reps != 1:
            raise InvalidArgumentError("replications need a simulation config")
    else:
        raise InvalidArgumentError("source must be a FunctionalSeries or a SimConfig")
    if scheme is None:
        scheme = make_windows(m, 1, m - 15, 15)

    def run(r):
        if isinstance(source, SimConfig):
            base = 0 if source.seed is None else source.seed
            series, truth = simulate(source.replace(seed=base + r))
            kern = truth if isinstance(truth, TrueKernel) else None
        else:
            series, kern = source, kernel
        if "exact" in methods and kern is None:
            raise UnsupportedError("the exact method needs the generating operator")
        return _one_series(series.values, series.grid, kern, methods, scheme, q, p_max, delta, folds)

    if threads == 1 or reps == 1:
        results = [run(r) for r in range(reps)]
    else:
        with ThreadPoolExecutor(max_workers=None if threads == 0 else threads) as pool:
            results = list(pool.map(run, range(reps)))

    report = ErrorReport()
    acc = {m: {k: [] for k in ((n, e) for n in NORMS for e in METRICS)} for m in methods}
    times = {m: [] for m in methods}
    for records in results:
        for method, errs, elapsed, p_hat in records:
            for k, v in errs.items():
                acc[method][k].append(v)
            times[method].append(elapsed)
            if p_hat is not None:
                report.p_hats.setdefault(method, []).append(p_hat)
    for method in methods:
        for (norm, metric), vals in acc[method].items():
            report.errors[(method, norm, metric)] = float(np.mean(vals))
        report.timing[method] = float(np.mean(times[method]))
    report.n_windows = len(results) * len(scheme.starts)
    return report

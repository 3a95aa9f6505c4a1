"""FCAR(q) fitting, one-step forecasts and the two baselines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Candidate, FunctionalSeries, Grid, PointSet, center
from .covariance import estimate, regression_coefficients
from .exceptions import DataError, InsufficientSampleError, InvalidArgumentError, UnsupportedError
from .selection import (
    DEFAULT_P_MAX,
    SelectionTrace,
    estimate_p_cv,
    estimate_p_kmeans,
    select_from_covariances,
)

__all__ = [
    "FCARModel",
    "fit",
    "predict",
    "forecast",
    "naive_predict",
    "exact_predict",
    "parse_p_rule",
    "save_model",
    "load_model",
]

MODEL_FORMAT = "fcar-model"
MODEL_VERSION = 1


def parse_p_rule(rule) -> tuple[str, int | None]:
    """Normalize a p rule: ``"kmeans"``, ``"cv"``, an int, or ``"fixed:<p>"``."""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        p = int(rule)
    elif isinstance(rule, str) and rule in ("kmeans", "cv"):
        return rule, None
    elif isinstance(rule, str) and rule.startswith("fixed:"):
        try:
            p = int(rule.split(":", 1)[1])
        except ValueError:
            raise InvalidArgumentError(f"bad fixed p rule {rule!r}") from None
    else:
        raise InvalidArgumentError(f"unknown p rule {rule!r}; use kmeans, cv or fixed:<p>")
    if p < 1:
        raise InvalidArgumentError("fixed p must be >= 1")
    return "fixed", p


@dataclass(frozen=True, eq=False)
class FCARModel:
    """A fitted point-selection autoregressive model.

    Column j of `alpha` is the coefficient function attached to
    ``points[j]``; predictions are ``sum_j alpha[:, j] * x_{n-lag_j}(t_j)`` on
    centered curves.
    """

    grid: Grid
    q: int
    points: PointSet
    alpha: np.ndarray
    p_hat: int
    p_rule: str
    mean_curve: np.ndarray
    trace: SelectionTrace
    provenance: dict = field(default_factory=dict)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "grid": self.grid.points.tolist(),
            "q": self.q,
            "delta": self.points.delta,
            "points": [{"lag": c.lag, "index": c.index, "abscissa": c.abscissa} for c in self.points],
            "alpha": self.alpha.T.tolist(),
            "p_hat": self.p_hat,
            "p_rule": self.p_rule,
            "mean_curve": self.mean_curve.tolist(),
            "trace": {
                "points": [{"lag": c.lag, "index": c.index, "abscissa": c.abscissa} for c in self.trace.chosen],
                "gains": self.trace.gains.tolist(),
                "skipped": list(self.trace.skipped),
                "elapsed": self.trace.elapsed,
                "stop_reason": self.trace.stop_reason,
            },
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FCARModel":
        if doc.get("format") != MODEL_FORMAT:
            raise DataError("not an fcar model document")
        if doc.get("version") != MODEL_VERSION:
            raise DataError(f"unsupported model version {doc.get('version')!r}")
        try:
            grid = Grid(doc["grid"])
            delta = float(doc["delta"])
            q = int(doc["q"])

            def cands(items):
                return tuple(Candidate.on(grid, int(c["lag"]), int(c["index"])) for c in items)

            points = PointSet(cands(doc["points"]), delta)
            alpha = np.array(doc["alpha"], dtype=float).reshape(len(points), len(grid)).T
            tr = doc["trace"]
            trace = SelectionTrace(
                cands(tr["points"]),
                np.array(tr["gains"], dtype=float),
                tuple(int(s) for s in tr["skipped"]),
                delta,
                q,
                float(tr.get("elapsed", 0.0)),
                tr.get("stop_reason", "p_max"),
            )
            return cls(
                grid,
                q,
                points,
                np.ascontiguousarray(alpha),
                int(doc["p_hat"]),
                str(doc["p_rule"]),
                np.array(doc["mean_curve"], dtype=float),
                trace,
                dict(doc.get("provenance", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed model document: {exc}") from exc


def save_model(model: FCARModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> FCARModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid model file ({exc})") from exc
    return FCARModel.from_dict(doc)


def fit(
    series: FunctionalSeries,
    q: int = 1,
    p_rule="kmeans",
    p_max: int = DEFAULT_P_MAX,
    delta: float | None = None,
    folds: int = 5,
    center_data: bool = True,
) -> FCARModel:
    """Select points and estimate coefficient functions.

    Parameters
    ----------
    series : FunctionalSeries
        Training curves, oldest first. Raw curves are centered by their
        sample mean unless `center_data` is false (then they are used as is).
    q : int
        Model order (number of past curves searched).
    p_rule : {"kmeans", "cv"} or int or "fixed:<p>"
        How many of the greedily selected points to keep.
    p_max : int
        Length of the greedy path.
    """
    rule, fixed_p = parse_p_rule(p_rule)
    if series.m <= q + 1:
        raise InsufficientSampleError(f"fitting order {q} needs more than {q + 1} curves, got {series.m}")
    if series.centered:
        work, mean = series, (series.mean_curve if series.mean_curve is not None else np.zeros(series.n_points))
    elif center_data:
        work, mean = center(series)
    else:
        mean = np.zeros(series.n_points)
        work = FunctionalSeries(series.grid, series.values, True, mean)
    cov = estimate(work, q)
    path_len = max(p_max, fixed_p or 0)
    trace = select_from_covariances(cov, path_len, delta)
    if rule == "fixed":
        if fixed_p > len(trace):
            raise InvalidArgumentError(
                f"fixed p={fixed_p} exceeds the {len(trace)} points available ({trace.stop_reason})"
            )
        p_hat = fixed_p
    elif rule == "kmeans":
        p_hat = estimate_p_kmeans(trace)
    else:
        p_hat = min(estimate_p_cv(series, q, path_len, folds, delta), len(trace))
    points = trace.points[:p_hat]
    alpha = regression_coefficients(cov, points)
    label = rule if rule != "fixed" else f"fixed:{fixed_p}"
    return FCARModel(
        series.grid,
        int(q),
        points,
        alpha,
        p_hat,
        label,
        np.array(mean, dtype=float),
        trace,
        {"m": series.m, "p_max": path_len},
    )


def _as_recent(recent, n_points: int, needed: int) -> np.ndarray:
    arr = np.asarray(recent, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != n_points:
        raise InvalidArgumentError(f"curves must have {n_points} grid values, got shape {arr.shape}")
    if arr.shape[0] < needed:
        raise InvalidArgumentError(f"need the {needed} most recent curves, got {arr.shape[0]}")
    return arr


def predict(model: FCARModel, recent, uncenter: bool = True) -> np.ndarray:
    """One-step forecast from the most recent curves.

    Parameters
    ----------
    recent : array_like, shape (>= q, G) or (G,)
        Past curves, most recent first.
    uncenter : bool
        If true, `recent` holds raw curves: they are centered with the
        training mean and the mean is added back to the forecast. If false,
        inputs and output are centered curves.
    """
    x = _as_recent(recent, len(model.grid), model.q)
    if uncenter:
        x = x - model.mean_curve
    out = model.alpha @ x[model.points.lags - 1, model.points.indices] if model.n_points else np.zeros(len(model.grid))
    return out + model.mean_curve if uncenter else out


def forecast(model: FCARModel, history, steps: int = 1) -> np.ndarray:
    """Iterated forecasts, feeding predictions back as inputs.

    `history` is in series order (oldest first). Beyond one step the
    forecasts condition on predicted curves, so they only approximate the
    multi-step conditional mean.
    """
    h = _as_recent(history, len(model.grid), model.q)
    if steps < 1:
        raise InvalidArgumentError("steps must be >= 1")
    recent = list(h[::-1][: model.q])
    out = []
    for _ in range(steps):
        nxt = predict(model, np.array(recent))
        out.append(nxt)
        recent = [nxt] + recent[:-1]
    return np.array(out)


def naive_predict(recent) -> np.ndarray:
    """Predict the next curve as the previous one (first row if stacked)."""
    arr = np.asarray(recent, dtype=float)
    return (arr if arr.ndim == 1 else arr[0]).copy()


def exact_predict(kernel, recent) -> np.ndarray:
    """Apply the true generating operator of a simulated process.

    `kernel` is the object returned by a simulator (``None`` for real data).
    """
    if kernel is None or not hasattr(kernel, "apply"):
        raise UnsupportedError("exact prediction needs the generating operator of a simulated process")
    return kernel.apply(recent)

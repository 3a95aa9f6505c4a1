"""CSV ingestion and emission of curve collections.

Layout: an optional first row holding the grid abscissas, then one row per
curve. Without a grid row the grid is taken uniform on [0, 1]. Numbers are
written in shortest round-trip form, so a write/read cycle is bit-exact.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import FunctionalSeries, Grid, make_uniform_grid
from .exceptions import DataError, FCARError

__all__ = ["read_series", "write_series", "write_matrix", "kernel_path", "read_kernel", "write_kernel"]


def _looks_like_grid(row: np.ndarray) -> bool:
    return row.size >= 2 and row[0] >= 0.0 and row[-1] <= 1.0 and bool(np.all(np.diff(row) > 0))


def read_series(path, header: str = "auto") -> FunctionalSeries:
    """Read curves from CSV.

    Parameters
    ----------
    header : {"auto", "yes", "no"}
        Whether the first row is the grid. ``auto`` treats it as the grid
        when it is strictly increasing inside [0, 1].
    """
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, raw in enumerate(csv.reader(fh), start=1):
                if not raw or all(not c.strip() for c in raw):
                    continue
                try:
                    vals = np.array([float(c) for c in raw])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: non-numeric cell ({exc})") from None
                if not np.all(np.isfinite(vals)):
                    raise DataError(f"{path}:{lineno}: non-finite value")
                rows.append((lineno, vals))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no data")
    width = rows[0][1].size
    for lineno, vals in rows:
        if vals.size != width:
            raise DataError(f"{path}:{lineno}: expected {width} columns, found {vals.size}")
    first = rows[0][1]
    if header == "yes" or (header == "auto" and len(rows) > 2 and _looks_like_grid(first)):
        try:
            grid = Grid(first)
        except FCARError as exc:
            raise DataError(f"{path}:{rows[0][0]}: invalid grid row ({exc})") from None
        rows = rows[1:]
    elif header in ("auto", "no"):
        if width < 2:
            raise DataError(f"{path}: curves need at least two columns")
        grid = make_uniform_grid(width)
    else:
        raise DataError(f"unknown header mode {header!r}")
    if len(rows) < 2:
        raise DataError(f"{path}: need at least two curves")
    return FunctionalSeries(grid, np.array([v for _, v in rows]))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_matrix(path, values, header=None) -> None:
    """Write a numeric matrix, optionally preceded by a header row.

    `path` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(path, values, header)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, values, header)


def _write_rows(fh, values, header) -> None:
    w = csv.writer(fh, lineterminator="\n")
    if header is not None:
        w.writerow([h if isinstance(h, str) else _fmt(h) for h in header])
    for row in np.atleast_2d(values):
        w.writerow([_fmt(v) for v in row])


def write_series(path, series_or_values, grid: Grid | None = None) -> None:
    if isinstance(series_or_values, FunctionalSeries):
        grid, values = series_or_values.grid, series_or_values.values
    else:
        values = series_or_values
    write_matrix(path, values, None if grid is None else grid.points)


def kernel_path(data_path) -> Path:
    """Sidecar descriptor path next to a simulated data file."""
    p = Path(data_path)
    return p.with_name(p.stem + ".kernel.json")


def write_kernel(path, descriptor: dict) -> None:
    Path(path).write_text(json.dumps(descriptor, indent=1) + "\n", encoding="utf-8")


def read_kernel(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read kernel descriptor {path}: {exc}") from exc

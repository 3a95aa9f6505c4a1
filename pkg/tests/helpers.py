"""Shared test data builders."""

import numpy as np

from fcar import FunctionalSeries, center, make_uniform_grid


def random_series(rng, m=50, g=51, centered=True):
    """Random-walk-in-s curves with some lag-1 dependence."""
    grid = make_uniform_grid(g)
    x = np.empty((m, g))
    prev = rng.standard_normal(g)
    for i in range(m):
        prev = 0.5 * prev[::-1] + np.cumsum(rng.standard_normal(g)) / np.sqrt(g)
        x[i] = prev
    s = FunctionalSeries(grid, x)
    return center(s)[0] if centered else s

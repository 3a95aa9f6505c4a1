"""Time greedy selection with the compiled and the numpy kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from fcar import center
from fcar._backend import compiled_kernels, python_kernels
from fcar.covariance import estimate
from fcar.selection import select_from_covariances
from fcar.simulate import SimConfig, simulate

CASES = [
    # (label, family, m, grid size, q, p_max)
    ("large", "sparse-log", 250, 101, 1, 10),
    ("fine grid", "sparse-log", 250, 401, 1, 10),
    ("order 3", "ou", 500, 201, 3, 20),
]


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [("numpy", python_kernels)]
    if compiled_kernels is not None:
        backends.append(("cython", compiled_kernels))
    else:
        print("compiled extension not built; timing numpy only")
    print(f"{'case':12s} {'backend':8s} {'seconds':>10s}  points")
    for label, family, m, g, q, p_max in CASES:
        series, _ = simulate(SimConfig(family, m, g, seed=1))
        cov = estimate(center(series)[0], q)
        cov.surfaces  # warm the surface cache so only selection is timed
        ref = None
        for name, kern in backends:
            trace = select_from_covariances(cov, p_max, kernels=kern)
            picks = [(c.lag, c.index) for c in trace.chosen]
            if ref is None:
                ref = (picks, trace.gains)
            elif picks != ref[0] or not np.allclose(trace.gains, ref[1], rtol=1e-10):
                raise SystemExit(f"{label}: backends disagree")
            t = best_of(lambda: select_from_covariances(cov, p_max, kernels=kern), args.repeat)
            print(f"{label:12s} {name:8s} {t:10.5f}  {len(picks)}")


if __name__ == "__main__":
    main()

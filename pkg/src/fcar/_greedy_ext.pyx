# cython: language_level=3
"""Compiled greedy-scan kernels; see ``_greedy_py`` for the reference versions."""

import numpy as np

from libc.math cimport INFINITY


def score_candidates(const double[:, ::1] rres, const double[::1] w,
                     const double[::1] diag, const unsigned char[::1] admissible,
                     double tau):
    cdef Py_ssize_t n_s = rres.shape[0]
    cdef Py_ssize_t n_c = rres.shape[1]
    cdef Py_ssize_t s, k
    cdef Py_ssize_t best = -1
    cdef Py_ssize_t skipped = 0
    cdef double best_gain = -INFINITY
    cdef double ws, r, g
    num_arr = np.zeros(n_c, dtype=np.float64)
    cdef double[::1] num = num_arr

    for s in range(n_s):
        ws = w[s]
        if ws == 0.0:
            continue
        for k in range(n_c):
            r = rres[s, k]
            num[k] += ws * r * r

    for k in range(n_c):
        if not admissible[k]:
            continue
        if not diag[k] > tau:
            skipped += 1
            continue
        g = num[k] / diag[k]
        if g > best_gain:
            best_gain = g
            best = k
    return best, best_gain, skipped


def schur_update(double[:, ::1] rres, double[::1] diag,
                 const double[::1] lvec, const double[::1] rcol):
    cdef Py_ssize_t n_s = rres.shape[0]
    cdef Py_ssize_t n_c = rres.shape[1]
    cdef Py_ssize_t s, k
    cdef double rs
    for s in range(n_s):
        rs = rcol[s]
        if rs == 0.0:
            continue
        for k in range(n_c):
            rres[s, k] -= rs * lvec[k]
    for k in range(n_c):
        diag[k] -= lvec[k] * lvec[k]

"""Numpy implementations of the greedy-scan kernels.

Both functions mirror ``_greedy_ext`` exactly; the compiled module is a
drop-in replacement selected by :mod:`fcar._backend`.
"""

import numpy as np


def score_candidates(rres, w, diag, admissible, tau):
    """Best admissible candidate under the residual-covariance quotient.

    Parameters
    ----------
    rres : ndarray, shape (S, N)
        Residual cross-covariances of the response with every candidate.
    w : ndarray, shape (S,)
        Quadrature weights over the response abscissas.
    diag : ndarray, shape (N,)
        Residual variances of the candidates.
    admissible : ndarray of uint8, shape (N,)
        Nonzero where a candidate may be chosen.
    tau : float
        Candidates with residual variance not above `tau` are skipped.

    Returns
    -------
    best : int
        Index of the winner (first on ties), or -1 if none is admissible.
    gain : float
        Its quotient (``-inf`` if none).
    skipped : int
        Admissible candidates rejected by the variance threshold.
    """
    num = w @ (rres * rres)
    adm = np.asarray(admissible, dtype=bool)
    ok = adm & (diag > tau)
    skipped = int(np.count_nonzero(adm & ~ok))
    if not ok.any():
        return -1, -np.inf, skipped
    gains = np.full(num.shape, -np.inf)
    gains[ok] = num[ok] / diag[ok]
    best = int(np.argmax(gains))
    return best, float(gains[best]), skipped


def schur_update(rres, diag, lvec, rcol):
    """In-place rank-one downdate after a candidate joins the point set."""
    rres -= np.outer(rcol, lvec)
    diag -= lvec * lvec

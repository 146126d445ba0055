"""Small fixed-shape linear algebra used across the package.

Shapes are tiny (at most 4x4), so pseudo-inverses go through the normal
equations with an explicit Gram inverse. An SVD path is only taken when the
caller asks for it on a near-degenerate matrix.
"""

from __future__ import annotations

import math

import numpy as np

GRAM_COND_LIMIT = 1e12
RANK_TOL = 1e-8


class DegenerateShapeError(ValueError):
    """Raised when a Gram matrix is too ill-conditioned to invert."""

    def __init__(self, shape, cond):
        super().__init__(f"near rank-deficient {shape[0]}x{shape[1]} matrix (Gram cond={cond:.3g})")
        self.shape = shape
        self.cond = cond


def pinv(m, *, svd_fallback: bool = False) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a small dense matrix.

    Wide full-row-rank input uses ``m.T @ inv(m @ m.T)``; tall (or square)
    full-column-rank input uses ``inv(m.T @ m) @ m.T``.

    Raises
    ------
    DegenerateShapeError
        If the relevant Gram matrix has 1-norm condition number above 1e12 and
        ``svd_fallback`` is false.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if not np.all(np.isfinite(m)):
        raise ValueError("pinv input must be finite")
    rows, cols = m.shape
    gram = m @ m.T if cols > rows else m.T @ m
    try:
        inv = np.linalg.inv(gram)
        # 1-norm condition number from the inverse already at hand
        cond = np.abs(gram).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
    except np.linalg.LinAlgError:
        inv, cond = None, math.inf
    if not cond <= GRAM_COND_LIMIT:
        if svd_fallback:
            return np.linalg.pinv(m)
        raise DegenerateShapeError(m.shape, cond)
    return m.T @ inv if cols > rows else inv @ m.T


def rank3(m, tol: float = RANK_TOL) -> int:
    """Numerical rank: count of singular values above ``tol * sigma_max``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    sv = np.linalg.svd(np.asarray(m, dtype=float), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def rmse3(residual) -> float:
    r = np.asarray(residual, dtype=float)
    return math.sqrt(float(r @ r) / r.size)

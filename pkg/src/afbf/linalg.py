"""Small linear-algebra helpers shared by the encoders."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


def spectral_norm(M, rtol: float = 1e-6, max_iter: int | None = None, seed: int = 0) -> float:
    """Spectral norm of a symmetric matrix by power iteration.

    Works for dense arrays, scipy sparse matrices and anything exposing
    ``@``. The start vector is drawn from a seeded generator so the
    estimate is reproducible. Iteration stops once two consecutive
    Rayleigh-type estimates agree to ``rtol`` or after ``10 * dim`` steps.
    """
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if n == 0:
        return 0.0
    if sp.issparse(M) and M.nnz == 0:
        return 0.0
    if max_iter is None:
        max_iter = max(10 * n, 10)
    rng = np.random.default_rng(seed)
    v = rng.random(n) + 0.5
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = np.asarray(M @ v).ravel()
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        if abs(nw - est) <= rtol * nw:
            return nw
        est = nw
        v = w / nw
    return est


def as_matrix(M):
    """Return ``M`` as a dense ndarray or CSR matrix (float64)."""
    if sp.issparse(M):
        return sp.csr_matrix(M, dtype=np.float64)
    return np.asarray(M, dtype=np.float64)


def is_zero(M) -> bool:
    if sp.issparse(M):
        return M.count_nonzero() == 0
    return not np.any(M)


def min_rayleigh(M, n_samples: int = 64, seed: int = 0) -> float:
    """Smallest Rayleigh quotient of ``M`` over seeded random directions."""
    rng = np.random.default_rng(seed)
    n = M.shape[0]
    V = rng.standard_normal((n, n_samples))
    V /= np.linalg.norm(V, axis=0)
    MV = np.asarray(M @ V)
    return float(np.min(np.einsum("ij,ij->j", V, MV)))

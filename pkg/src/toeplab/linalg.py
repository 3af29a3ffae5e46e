"""Dense complex linear algebra used throughout the package.

Matrices are ``numpy`` ``complex128`` arrays.  Factorizations and the
eigensolver come from LAPACK through ``scipy.linalg``; the iterative
singular-value and norm estimators are written here so that their stopping
rules are explicit.  Determinants of exponentially ill-conditioned band
matrices can be taken in extended precision with ``mpmath``.
"""

from __future__ import annotations

import warnings

import mpmath
import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NonSquare

DenseComplexMatrix = np.ndarray
MAX_EIG_DIM = 2048


def as_matrix(A, square: bool = False) -> np.ndarray:
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise NonSquare(f"expected a 2-d array, got shape {M.shape}")
    if square and M.shape[0] != M.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def lu_factor(A):
    """Partial-pivoted LU ``(lu, piv)``; exact zero pivots are allowed."""
    M = as_matrix(A, square=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(M, check_finite=False)


def lu_log_abs_det(A) -> float:
    """``log|det A|`` from the LU pivots; ``-inf`` for an exact zero pivot."""
    M = as_matrix(A, square=True)
    if M.shape[0] == 0:
        return 0.0
    lu, _ = lu_factor(M)
    piv = np.abs(np.diag(lu))
    if np.any(piv == 0):
        return float("-inf")
    return float(np.sum(np.log(piv)))


def eigenvalues(A, max_n: int = MAX_EIG_DIM) -> np.ndarray:
    """All eigenvalues with multiplicity (LAPACK ``zgeev``)."""
    M = as_matrix(A, square=True)
    n = M.shape[0]
    if n > max_n:
        raise ValueError(f"matrix dimension {n} exceeds the configured maximum {max_n}")
    if n == 0:
        return np.empty(0, dtype=complex)
    try:
        return sla.eigvals(M, check_finite=False, overwrite_a=False).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"QR iteration failed: {exc}") from exc


def solve(A, B) -> np.ndarray:
    M = as_matrix(A, square=True)
    lu, piv = lu_factor(M)
    if np.any(np.diag(lu) == 0):
        raise np.linalg.LinAlgError("singular matrix")
    return sla.lu_solve((lu, piv), np.asarray(B, dtype=complex), check_finite=False)


def _start_block(n: int, p: int) -> np.ndarray:
    rng = np.random.default_rng(12345)
    X = rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))
    return np.linalg.qr(X)[0]


def smallest_singular_value(A, tol: float = 1e-8, max_iter: int = 500, block: int = 6) -> float:
    """``s_min(A)`` by block inverse iteration with LU solves of ``A`` and ``A^*``.

    Returns 0 when the LU factorization meets an exact zero pivot.
    """
    M = as_matrix(A, square=True)
    n = M.shape[0]
    if n == 0:
        raise NonSquare("empty matrix")
    lu, piv = lu_factor(M)
    if np.any(np.diag(lu) == 0):
        return 0.0
    p = min(block, n)
    Q = _start_block(n, p)
    prev = None
    for _ in range(max_iter):
        W = sla.lu_solve((lu, piv), Q, check_finite=False)
        s = np.linalg.svd(W, compute_uv=False)[0]
        est = 1.0 / s
        if not np.isfinite(est):
            return 0.0
        if prev is not None and abs(est - prev) <= 0.01 * tol * est:
            return float(est)
        prev = est
        Y = sla.lu_solve((lu, piv), W, trans=2, check_finite=False)
        Q = np.linalg.qr(Y)[0]
    raise NoConvergence(f"inverse iteration for s_min did not settle in {max_iter} steps")


def operator_norm_estimate(A, tol: float = 1e-6, max_iter: int = 1000, block: int = 4) -> float:
    """Spectral norm by block power iteration on ``A^* A``.

    The estimate is a lower bound; iteration stops when the relative change
    stagnates below ``tol / 100``.
    """
    M = as_matrix(A)
    n = M.shape[1]
    if M.size == 0:
        return 0.0
    p = min(block, n)
    Q = _start_block(n, p)
    prev = None
    for _ in range(max_iter):
        W = M @ Q
        est = float(np.linalg.svd(W, compute_uv=False)[0])
        if est == 0.0:
            return 0.0
        if prev is not None and abs(est - prev) <= 0.01 * tol * est:
            return est
        prev = est
        Q = np.linalg.qr(M.conj().T @ W)[0]
    raise NoConvergence(f"power iteration for the norm did not settle in {max_iter} steps")


def hs_norm(A) -> float:
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(A, dtype=complex)))


def banded_log_abs_det_mp(A, lower: int, upper: int, dps: int = 50):
    """``log|det A|`` in ``dps``-digit arithmetic for a band matrix.

    Partial-pivoted elimination touching only the band (plus the fill-in
    that pivoting creates), so the cost is ``O(n * lower * (lower + upper))``.
    Returns an ``mpmath.mpf``; ``-inf`` for an exact zero pivot.
    """
    M = as_matrix(A, square=True)
    n = M.shape[0]
    with mpmath.workdps(dps):
        rows = [[mpmath.mpc(complex(v)) for v in M[i]] for i in range(n)]
        total = mpmath.mpf(0)
        for k in range(n):
            last_row = min(n - 1, k + lower)
            last_col = min(n - 1, k + lower + upper)
            p = max(range(k, last_row + 1), key=lambda i: abs(rows[i][k]))
            if rows[p][k] == 0:
                return mpmath.mpf("-inf")
            if p != k:
                rows[k], rows[p] = rows[p], rows[k]
            pivot = rows[k][k]
            total += mpmath.log(abs(pivot))
            for i in range(k + 1, last_row + 1):
                f = rows[i][k] / pivot
                if f == 0:
                    continue
                ri, rk = rows[i], rows[k]
                for j in range(k + 1, last_col + 1):
                    ri[j] -= f * rk[j]
        return +total


def log_abs_det_mp(rows, dps: int = 50):
    """``log|det|`` of a small matrix given as nested lists of mpmath numbers."""
    with mpmath.workdps(dps):
        d = mpmath.det(mpmath.matrix(rows))
        return mpmath.log(abs(d)) if d != 0 else mpmath.mpf("-inf")

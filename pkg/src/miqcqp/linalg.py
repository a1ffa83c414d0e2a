"""Dense symmetric linear algebra helpers.

Thin contracts over LAPACK (via numpy): full eigendecomposition with
ascending eigenvalues, the extreme eigenpair, and a shift-tolerant Cholesky
PSD test.  Block sizes in this project stay small (bordered matrices of a
few hundred at most), so dense is the right tool.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

SYM_TOL = 1e-9


def symmetrize(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def _check_sym(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - M.T).max() > SYM_TOL * scale:
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def sym_eig(M) -> Tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of symmetric M."""
    M = _check_sym(M)
    w, V = np.linalg.eigh(M)
    return w, V


def min_eigpair(M) -> Tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector of symmetric M."""
    w, V = sym_eig(M)
    return float(w[0]), V[:, 0].copy()


def chol_psd(M, shift_tol: float = 1e-10) -> Optional[np.ndarray]:
    """Cholesky factor L with LL' = M + eps*I for some 0 <= eps <= shift_tol.

    Returns None (NOT_PSD) iff the smallest eigenvalue of M is below
    -shift_tol; the diagonal shift absorbs roundoff-level indefiniteness.
    """
    M = _check_sym(M)
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pass
    wmin = float(np.linalg.eigvalsh(M)[0])
    if wmin < -shift_tol:
        return None
    scale = max(1.0, float(np.abs(M).max()))
    shift = min(shift_tol, max(-wmin, 0.0) + 1e-15 * scale)
    d = M.shape[0]
    while shift <= shift_tol:
        try:
            return np.linalg.cholesky(M + shift * np.eye(d))
        except np.linalg.LinAlgError:
            shift = max(shift * 8.0, 1e-15 * scale)
    try:
        return np.linalg.cholesky(M + shift_tol * np.eye(d))
    except np.linalg.LinAlgError:
        return None

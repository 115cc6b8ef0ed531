"""Dense symmetric kernels: eigendecomposition, PSD projection, Perron pair,
simplex and hyperplane projections.

Symmetric matrices are stored as full dense ``numpy`` arrays; row/column 0 is
the extended index of lifted matrices.
"""

from __future__ import annotations

import numpy as np

from .errors import NoConvergence


def symmetrize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def sym_eig(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order with orthonormal eigenvectors as columns."""
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NoConvergence("matrix has non-finite entries")
    try:
        lam, Q = np.linalg.eigh(symmetrize(A))
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    return lam[::-1].copy(), Q[:, ::-1].copy()


def psd_project(A: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues zeroed)."""
    lam, Q = sym_eig(A)
    pos = lam > 0
    if not np.any(pos):
        return np.zeros_like(A, dtype=float)
    Qp = Q[:, pos] * np.sqrt(lam[pos])
    return Qp @ Qp.T


def perron_pair(A: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a nonnegative unit eigenvector of a nonnegative matrix.

    Small negative entries are clamped to zero. The dense eigensolver gives a
    starting vector; power iteration then refines it until the iterate moves
    less than ``tol``.
    """
    A = np.maximum(symmetrize(np.asarray(A, dtype=float)), 0.0)
    d = A.shape[0]
    if not np.any(A):
        w = np.zeros(d)
        w[0] = 1.0
        return 0.0, w
    _, Q = sym_eig(A)
    w = np.abs(Q[:, 0])
    # shift keeps the iteration convergent when -lambda_max is also an eigenvalue
    shift = np.abs(A).sum(axis=1).max() * 1e-3
    for _ in range(max_iter):
        v = A @ w + shift * w
        v /= np.linalg.norm(v)
        if np.linalg.norm(v - w) < tol:
            w = v
            break
        w = v
    else:
        raise NoConvergence(f"power iteration did not converge in {max_iter} steps")
    w = np.maximum(w, 0.0)
    w /= np.linalg.norm(w)
    return float(w @ A @ w), w


def project_simplex(v, a: float = 1.0) -> np.ndarray:
    """Projection onto ``{x : sum(x) = a, x >= 0}`` by sorting and thresholding."""
    v = np.asarray(v, dtype=float)
    if a < 0:
        raise ValueError("simplex radius must be nonnegative")
    if v.size == 0:
        return v.copy()
    if a == 0:
        return np.zeros_like(v)
    u = np.sort(v)[::-1]
    cs = np.cumsum(u)
    css = cs - a
    k = np.arange(1, v.size + 1)
    # the first index always qualifies in exact arithmetic; round-off can hide it when a is tiny
    hits = np.nonzero(u - css / k > 0)[0]
    rho = hits[-1] if hits.size else 0
    # add a after centering so it survives when it is far below the entries
    mean = cs[rho] / (rho + 1)
    return np.maximum((v - mean) + a / (rho + 1), 0.0)


def project_hyperplane_sum(v, a: float) -> np.ndarray:
    """Projection onto ``{x : sum(x) = a}``."""
    v = np.asarray(v, dtype=float)
    return v - (v.sum() - a) / v.size

"""Dense symmetric linear algebra: eigendecomposition, SPD solves, PSD projection.

Everything works on plain numpy arrays. Matrices in this project stay at
N <= ~1200, so dense O(N^3) routines are the right tool; no sparse or
iterative paths are provided.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NotPositiveDefinite

# Relative tolerances the routines are contracted to meet.
SOLVE_RTOL = 1e-10
RECONSTRUCT_RTOL = 1e-10


def symmetrize(m: np.ndarray) -> np.ndarray:
    """Exactly symmetric copy of ``m`` (average with its transpose)."""
    m = np.asarray(m, dtype=float)
    return (m + m.T) / 2.0


def _check_square_finite(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInput("matrix contains non-finite entries")
    return m


def sym_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix.

    Returns ``(w, v)`` with eigenvalues ascending and orthonormal eigenvector
    columns, so that ``v @ diag(w) @ v.T`` reconstructs ``m`` to
    RECONSTRUCT_RTOL in relative Frobenius norm.
    """
    m = _check_square_finite(m)
    w, v = np.linalg.eigh(m)
    return w, v


def solve_spd(m: np.ndarray, rhs: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Solve ``(m + ridge*I) x = rhs`` by Cholesky factorization.

    Raises NotPositiveDefinite if the ridged matrix fails to factor.
    """
    m = _check_square_finite(m)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != m.shape[0]:
        raise InvalidInput(
            f"rhs length {rhs.shape[0]} does not match matrix size {m.shape[0]}"
        )
    if ridge < 0:
        raise InvalidInput("ridge must be >= 0")
    a = m if ridge == 0.0 else m + ridge * np.eye(m.shape[0])
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            f"matrix is not positive definite at ridge={ridge}"
        ) from exc
    return scipy.linalg.cho_solve(factor, rhs)


def spd_inverse(m: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Dense inverse of ``m + ridge*I`` through the same Cholesky path."""
    x = solve_spd(m, np.eye(np.asarray(m).shape[0]), ridge)
    return symmetrize(x)


def psd_project(m: np.ndarray, eig_floor: float = 0.0) -> np.ndarray:
    """Clip eigenvalues of a symmetric matrix up to ``eig_floor``.

    If the smallest eigenvalue already meets the floor the input is returned
    unchanged (as a float copy); otherwise the eigenvalue-clipped
    reconstruction ``v @ diag(max(w, eig_floor)) @ v.T`` is returned,
    symmetrized exactly.
    """
    m = _check_square_finite(m)
    w, v = np.linalg.eigh(m)
    if w[0] >= eig_floor:
        return m.copy()
    w_clipped = np.maximum(w, eig_floor)
    return symmetrize((v * w_clipped) @ v.T)


def opnorm(m: np.ndarray) -> float:
    """Operator (spectral) norm of a symmetric matrix."""
    m = _check_square_finite(m)
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))

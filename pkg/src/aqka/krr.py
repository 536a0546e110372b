"""Kernel ridge regression: fit, loss, pair-level gradient and sensitivity.

The training loss L(K) = ||y - K a||^2 = ridge^2 ||a||^2 for
a = (K + ridge*I)^{-1} y has a closed-form gradient with respect to each
unique kernel entry; its square times the Bernoulli variance K(1-K) is the
allocation weight every acquisition strategy in this package consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NotPositiveDefinite
from .numerics import spd_inverse
from .shotsim import diagonal_mask, pair_count, pair_indices

FIT_RTOL = 1e-8


@dataclass
class KrrFit:
    """Ridge solution alpha, second solve beta = (K + ridge*I)^{-1} alpha, loss."""

    alpha: np.ndarray
    beta: np.ndarray
    ridge: float
    loss: float

    @property
    def n(self) -> int:
        return self.alpha.shape[0]


@dataclass
class SensitivityField:
    """Per-pair gradient g_p, allocation weight a_p = g_p^2 K_p(1-K_p), proxy."""

    grad: np.ndarray
    weights: np.ndarray
    proxy: np.ndarray


def krr_fit(k: np.ndarray, y: np.ndarray, ridge: float) -> KrrFit:
    """Solve the ridge system twice to get alpha, beta, and the training loss."""
    if ridge <= 0:
        raise InvalidInput("ridge must be > 0")
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    n = k.shape[0]
    a = k + ridge * np.eye(n)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "K + ridge*I failed Cholesky; PSD-project the estimate first"
        ) from exc
    alpha = scipy.linalg.cho_solve(factor, y)
    beta = scipy.linalg.cho_solve(factor, alpha)
    loss = float(ridge**2 * np.dot(alpha, alpha))
    return KrrFit(alpha=alpha, beta=beta, ridge=ridge, loss=loss)


def training_loss(k: np.ndarray, y: np.ndarray, alpha: np.ndarray) -> float:
    """Directly computed ||y - K alpha||^2 (cross-check for the closed form)."""
    r = np.asarray(y) - np.asarray(k) @ np.asarray(alpha)
    return float(np.dot(r, r))


def krr_gradient(fit: KrrFit) -> np.ndarray:
    """Pair-level loss gradient as an M-vector.

    Off-diagonal pairs: -2*ridge^2*(beta_i alpha_j + beta_j alpha_i);
    diagonal pairs carry the factor-1/2 convention -2*ridge^2*beta_i alpha_i.
    """
    lam2 = fit.ridge**2
    g_mat = -2.0 * lam2 * (np.outer(fit.beta, fit.alpha) + np.outer(fit.alpha, fit.beta))
    iu, ju = pair_indices(fit.n)
    g = g_mat[iu, ju]
    g[diagonal_mask(fit.n)] /= 2.0
    return g


def krr_sensitivity(grad: np.ndarray, k_pairs: np.ndarray, ridge: float) -> SensitivityField:
    """Allocation weights a_p = g_p^2 K_p(1-K_p) with K clipped to [0, 1].

    The clip guards placeholder and PSD-projected estimates; shot-count
    estimates are already in range. The proxy field is g_p^2 / (4*ridge^4).
    """
    grad = np.asarray(grad, dtype=float)
    k = np.clip(np.asarray(k_pairs, dtype=float), 0.0, 1.0)
    weights = grad**2 * k * (1.0 - k)
    proxy = grad**2 / (4.0 * ridge**4)
    return SensitivityField(grad=grad, weights=weights, proxy=proxy)


def gauss_newton_diag(fit: KrrFit, k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pair Gauss-Newton curvature and signed remainder, as M-vectors.

    For the symmetric perturbation direction of pair (i, j), with
    A = (K + ridge*I)^{-1} and B = A^2:

        h_gn = 2*ridge^2 * ||A E_ij alpha||^2
        rem  = 4*ridge^2 * (A_ij(b_i a_j + b_j a_i) + A_ii b_j a_j + A_jj b_i a_i)

    Diagonal pairs use E_ii = e_i e_i^T, giving h_gn = 2*ridge^2 a_i^2 B_ii
    and rem = 4*ridge^2 A_ii b_i a_i.
    """
    a_inv = spd_inverse(np.asarray(k, dtype=float), fit.ridge)
    b = a_inv @ a_inv
    al, be, lam2 = fit.alpha, fit.beta, fit.ridge**2
    iu, ju = pair_indices(fit.n)
    diag = diagonal_mask(fit.n)

    ai, aj = al[iu], al[ju]
    h_gn = 2.0 * lam2 * (
        aj**2 * b[iu, iu] + 2.0 * ai * aj * b[iu, ju] + ai**2 * b[ju, ju]
    )
    h_gn[diag] = 2.0 * lam2 * (al[iu][diag] ** 2) * b[iu, iu][diag]

    rem = 4.0 * lam2 * (
        a_inv[iu, ju] * (be[iu] * aj + be[ju] * ai)
        + a_inv[iu, iu] * be[ju] * aj
        + a_inv[ju, ju] * be[iu] * ai
    )
    rem[diag] = 4.0 * lam2 * (a_inv[iu, iu] * be[iu] * al[iu])[diag]
    return h_gn, rem


def remainder_envelope(fit: KrrFit, y_norm: float) -> np.ndarray:
    """Bound 8*||y||*(|alpha_i| + |alpha_j|)/ridge on the signed remainder."""
    iu, ju = pair_indices(fit.n)
    return 8.0 * y_norm / fit.ridge * (np.abs(fit.alpha[iu]) + np.abs(fit.alpha[ju]))


def leverage_scores(k: np.ndarray, ridge: float) -> np.ndarray:
    """Ridge leverage scores diag(K (K + ridge*I)^{-1})."""
    if ridge <= 0:
        raise InvalidInput("ridge must be > 0")
    a_inv = spd_inverse(np.asarray(k, dtype=float), ridge)
    return 1.0 - ridge * np.diag(a_inv)


def leverage_pair_scores(lev: np.ndarray, k_pairs: np.ndarray) -> np.ndarray:
    """Pair score (l_i + l_j) * sqrt(K_p(1-K_p)) for the leverage allocator."""
    lev = np.asarray(lev, dtype=float)
    n = lev.shape[0]
    if np.asarray(k_pairs).shape != (pair_count(n),):
        raise InvalidInput("pair values do not match leverage score length")
    k = np.clip(np.asarray(k_pairs, dtype=float), 0.0, 1.0)
    iu, ju = pair_indices(n)
    return (lev[iu] + lev[ju]) * np.sqrt(k * (1.0 - k))


def predict_and_score(
    k_test: np.ndarray,
    alpha: np.ndarray,
    y_test: np.ndarray,
    y_raw: np.ndarray | None = None,
) -> tuple[float, float]:
    """Accuracy of sign(K_test alpha) against labels, MSE against raw targets.

    sign(0) counts as +1. ``y_raw`` defaults to ``y_test`` when the raw
    regression targets coincide with the labels.
    """
    k_test = np.asarray(k_test, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    y_test = np.asarray(y_test, dtype=float)
    if k_test.shape[1] != alpha.shape[0] or k_test.shape[0] != y_test.shape[0]:
        raise InvalidInput("test kernel, alpha, and labels have mismatched shapes")
    pred = k_test @ alpha
    signed = np.where(pred >= 0, 1.0, -1.0)
    accuracy = float(np.mean(signed == y_test))
    raw = y_test if y_raw is None else np.asarray(y_raw, dtype=float)
    mse = float(np.mean((pred - raw) ** 2))
    return accuracy, mse

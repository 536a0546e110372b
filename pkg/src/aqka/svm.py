"""Box-constrained SVM dual solver and its envelope-theorem sensitivity.

The dual  max f(eta) = 1'eta - 0.5 eta' (YKY) eta  over 0 <= eta_i <= C,
y'eta = 0 is solved by pairwise coordinate ascent on the maximal violating
pair, which keeps the equality constraint satisfied at every step and never
decreases the objective. The gradient of the optimal value with respect to a
kernel entry is available in closed form at the fixed optimal dual variables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceFailure, InvalidInput
from .shotsim import diagonal_mask, pair_indices

DEFAULT_KKT_TOL = 1e-6
DEFAULT_MAX_ITER = 100_000
SUPPORT_TOL_FRAC = 1e-8  # support threshold as a fraction of the box C


@dataclass
class SvmFit:
    """Dual variables at the optimum with bookkeeping for diagnostics."""

    eta: np.ndarray
    box: float
    dual_objective: float
    support: np.ndarray
    kkt_violation: float
    n_iter: int
    objective_history: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    @property
    def n_support(self) -> int:
        return self.support.shape[0]


def _dual_objective(eta: np.ndarray, q: np.ndarray) -> float:
    return float(eta.sum() - 0.5 * eta @ q @ eta)


def svm_dual_solve(
    k: np.ndarray,
    y: np.ndarray,
    box: float,
    tol: float = DEFAULT_KKT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    track_objective: bool = False,
) -> SvmFit:
    """Solve the box-constrained SVM dual by maximal-violating-pair ascent.

    Requires both classes present and a PSD kernel (project indefinite
    estimates first). Raises ConvergenceFailure carrying the best iterate if
    the KKT gap is still above ``tol`` after ``max_iter`` pair updates.
    """
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    n = k.shape[0]
    if box <= 0:
        raise InvalidInput("box constraint C must be > 0")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise InvalidInput("labels must be in {-1, +1}")
    if np.all(y > 0) or np.all(y < 0):
        raise InvalidInput("both classes must be present")

    q = (y[:, None] * y[None, :]) * k
    eta = np.zeros(n)
    grad = -np.ones(n)  # gradient of the minimized form 0.5 e'Qe - 1'e
    history = []
    eps = 1e-12 * box

    violation = np.inf
    for it in range(max_iter):
        yg = -y * grad
        up = ((y > 0) & (eta < box - eps)) | ((y < 0) & (eta > eps))
        low = ((y > 0) & (eta > eps)) | ((y < 0) & (eta < box - eps))
        if not up.any() or not low.any():
            violation = 0.0
            break
        i = int(np.argmax(np.where(up, yg, -np.inf)))
        j = int(np.argmin(np.where(low, yg, np.inf)))
        violation = yg[i] - yg[j]
        if violation < tol:
            break

        # Exact two-variable subproblem along eta_i += y_i t, eta_j -= y_j t.
        curv = max(k[i, i] + k[j, j] - 2.0 * k[i, j], 1e-12)
        t = violation / curv
        if y[i] > 0:
            t = min(t, box - eta[i])
        else:
            t = min(t, eta[i])
        if y[j] > 0:
            t = min(t, eta[j])
        else:
            t = min(t, box - eta[j])
        if t <= 0:
            break
        eta[i] += y[i] * t
        eta[j] -= y[j] * t
        np.clip(eta, 0.0, box, out=eta)
        grad += t * (y[i] * q[:, i] - y[j] * q[:, j])
        if track_objective:
            history.append(_dual_objective(eta, q))
    else:
        fit = _build_fit(eta, box, q, violation, max_iter, history)
        raise ConvergenceFailure(
            f"KKT violation {violation:.3e} above tol {tol:.1e} "
            f"after {max_iter} iterations",
            fit=fit,
        )
    return _build_fit(eta, box, q, max(violation, 0.0), it + 1, history)


def _build_fit(eta, box, q, violation, n_iter, history) -> SvmFit:
    support = np.nonzero(eta > SUPPORT_TOL_FRAC * box)[0]
    return SvmFit(
        eta=eta,
        box=box,
        dual_objective=_dual_objective(eta, q),
        support=support,
        kkt_violation=float(violation),
        n_iter=n_iter,
        objective_history=history,
    )


def svm_envelope_gradient(fit: SvmFit, y: np.ndarray) -> np.ndarray:
    """Gradient of the optimal dual value per pair, as an M-vector.

    Off-diagonal: -y_i y_j eta_i eta_j; diagonal: -eta_i^2 / 2. Supported
    exactly on support x support pairs.
    """
    y = np.asarray(y, dtype=float)
    eta = fit.eta
    iu, ju = pair_indices(fit.n)
    g = -(y[iu] * y[ju]) * eta[iu] * eta[ju]
    diag = diagonal_mask(fit.n)
    g[diag] = -0.5 * eta[iu][diag] ** 2
    return g


def svm_sensitivity_weights(fit: SvmFit, y: np.ndarray, k_pairs: np.ndarray) -> np.ndarray:
    """Allocation weights g_p^2 K_p(1-K_p) for the envelope gradient field."""
    g = svm_envelope_gradient(fit, y)
    k = np.clip(np.asarray(k_pairs, dtype=float), 0.0, 1.0)
    return g**2 * k * (1.0 - k)


def svm_bias(fit: SvmFit, k: np.ndarray, y: np.ndarray) -> float:
    """Intercept from the KKT conditions, averaged over free support vectors."""
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    decision = k @ (fit.eta * y)
    margin = fit.box * SUPPORT_TOL_FRAC
    free = (fit.eta > margin) & (fit.eta < fit.box - margin)
    if free.any():
        return float(np.mean(y[free] - decision[free]))
    residual = y - decision
    return float(0.5 * (residual.min() + residual.max()))


def svm_decision(fit: SvmFit, k_cross: np.ndarray, y: np.ndarray, bias: float) -> np.ndarray:
    """Decision values K_cross (eta * y) + b for out-of-sample rows."""
    return np.asarray(k_cross, dtype=float) @ (fit.eta * np.asarray(y, dtype=float)) + bias

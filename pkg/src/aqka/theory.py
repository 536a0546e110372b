"""Closed-form bound evaluation for sensitivity-weighted shot allocation.

Computes the optimal-to-uniform variance ratio, its sparse and SVM support
ceilings, the higher-order remainder envelope, and the warm-up plug-in
inflation factor. Absolute constants the analysis leaves abstract are caller
inputs defaulting to 1.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateWeights, InvalidInput, RegularityViolation
from .shotsim import pair_count


def cs_ratio(weights: np.ndarray) -> float:
    """Variance ratio of the optimal to the uniform allocation.

    rho = Z^2 / (M * sum_p a_p) with Z = sum_p sqrt(a_p); always <= 1, with
    equality exactly when the weights are constant.
    """
    a = np.asarray(weights, dtype=float)
    if np.any(a < 0):
        raise InvalidInput("weights must be non-negative")
    total = a.sum()
    if total <= 0:
        raise DegenerateWeights("all weights are zero")
    z = np.sqrt(a).sum()
    return float(z**2 / (a.size * total))


def sparse_ceiling(m: int, n: int) -> float:
    """Ratio of pairs touching an m-point support to all pairs.

    The gradient of a ridge loss with coefficients supported on m points is
    supported on the strip of pairs touching the support, of size
    m(2n - m + 1)/2 out of n(n + 1)/2.
    """
    if not 1 <= m <= n:
        raise InvalidInput(f"support size m={m} must lie in [1, {n}]")
    strip = m * (2 * n - m + 1) // 2
    return strip / pair_count(n)


def svm_ceiling(m_sv: int, n: int) -> float:
    """Support-block pair fraction m_sv(m_sv+1)/2 over n(n+1)/2."""
    if not 1 <= m_sv <= n:
        raise InvalidInput(f"support size m_sv={m_sv} must lie in [1, {n}]")
    return pair_count(m_sv) / pair_count(n)


@dataclass
class RemainderBound:
    """Value of (C / ridge^4) (sum_p 1/s_p)^2 plus a divergence flag."""

    value: float
    divergent: bool
    inverse_shot_sum: float


def remainder_bound(
    shot_counts: np.ndarray, ridge: float, const: float = 1.0
) -> RemainderBound:
    """Higher-order remainder envelope for a shot allocation.

    Any counted pair with zero shots makes the envelope divergent; the
    returned value then sums only over sampled pairs and the flag is set.
    """
    s = np.asarray(shot_counts, dtype=float)
    if np.any(s < 0):
        raise InvalidInput("shot counts must be non-negative")
    if ridge <= 0:
        raise InvalidInput("ridge must be > 0")
    divergent = bool(np.any(s == 0))
    sampled = s[s > 0]
    inv_sum = float(np.sum(1.0 / sampled)) if sampled.size else float("inf")
    value = float("inf") if divergent else const / ridge**4 * inv_sum**2
    return RemainderBound(value=value, divergent=divergent, inverse_shot_sum=inv_sum)


def plugin_inflation(
    delta_w: float,
    ridge: float,
    a_min: float,
    kappa: float,
    y_norm: float,
    constant: float = 16.0,
) -> float:
    """Variance inflation factor 1 + C_K * delta_w / (ridge^3 sqrt(a_min)).

    C_K = constant * (kappa + ridge) * ||y||^2 with the tightened constant 16
    by default; pass 48 for the looser bookkeeping variant.
    """
    if a_min <= 0:
        raise RegularityViolation("a_min must be positive on the weight support")
    if delta_w < 0:
        raise InvalidInput("delta_w is an operator norm and must be >= 0")
    if ridge <= 0:
        raise InvalidInput("ridge must be > 0")
    c_k = constant * (kappa + ridge) * y_norm**2
    return float(1.0 + c_k * delta_w / (ridge**3 * np.sqrt(a_min)))


def allocation_variance(weights: np.ndarray, shots: np.ndarray) -> float:
    """Delta-method variance sum_p a_p / s_p; infinite if an active pair is unshot."""
    a = np.asarray(weights, dtype=float)
    s = np.asarray(shots, dtype=float)
    active = a > 0
    if np.any(s[active] <= 0):
        return float("inf")
    return float(np.sum(a[active] / s[active]))


@dataclass
class BoundReport:
    """Bundle of evaluated bound quantities for one instance."""

    rho: float
    sparse_ceiling: float | None
    svm_ceiling: float | None
    remainder: float
    remainder_divergent: bool
    plugin_inflation: float | None
    inputs: dict

    def to_json(self, **dump_kwargs) -> str:
        return json.dumps(asdict(self), **dump_kwargs)


def bound_report(
    weights: np.ndarray,
    shot_counts: np.ndarray,
    ridge: float,
    n: int,
    support_size: int | None = None,
    sv_count: int | None = None,
    delta_w: float | None = None,
    kappa: float | None = None,
    y_norm: float | None = None,
    remainder_const: float = 1.0,
) -> BoundReport:
    """Assemble every evaluable bound for one sensitivity field and ledger."""
    a = np.asarray(weights, dtype=float)
    rem = remainder_bound(shot_counts, ridge, remainder_const)
    inflation = None
    a_min = float(a[a > 0].min()) if np.any(a > 0) else 0.0
    if delta_w is not None and kappa is not None and y_norm is not None:
        inflation = plugin_inflation(delta_w, ridge, a_min, kappa, y_norm)
    return BoundReport(
        rho=cs_ratio(a),
        sparse_ceiling=sparse_ceiling(support_size, n) if support_size else None,
        svm_ceiling=svm_ceiling(sv_count, n) if sv_count else None,
        remainder=rem.value,
        remainder_divergent=rem.divergent,
        plugin_inflation=inflation,
        inputs={
            "n": n,
            "n_pairs": pair_count(n),
            "ridge": ridge,
            "support_size": support_size,
            "sv_count": sv_count,
            "delta_w": delta_w,
            "kappa": kappa,
            "y_norm": y_norm,
            "a_min": a_min,
            "total_shots": int(np.asarray(shot_counts).sum()),
        },
    )

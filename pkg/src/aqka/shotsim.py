"""Bernoulli shot simulation and per-pair ledger bookkeeping.

All pair-indexed arrays run over the M = N(N+1)/2 upper-triangular pairs of
an N x N symmetric kernel, diagonal included, in ``np.triu_indices`` order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidInput, ParseError

LEDGER_HEADER = ["i", "j", "shots", "successes"]


def pair_count(n: int) -> int:
    """Number of unique entries of an n x n symmetric matrix."""
    return n * (n + 1) // 2


@lru_cache(maxsize=64)
def _pair_indices_cached(n: int) -> tuple[np.ndarray, np.ndarray]:
    iu, ju = np.triu_indices(n)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices of the upper-triangular pairs (read-only views)."""
    return _pair_indices_cached(n)


def diagonal_mask(n: int) -> np.ndarray:
    iu, ju = pair_indices(n)
    return iu == ju


def pairs_from_matrix(m: np.ndarray) -> np.ndarray:
    """Gather the upper-triangular entries of a square matrix as an M-vector."""
    m = np.asarray(m)
    iu, ju = pair_indices(m.shape[0])
    return m[iu, ju]


def matrix_from_pairs(values: np.ndarray, n: int) -> np.ndarray:
    """Scatter an M-vector of pair values into an exactly symmetric matrix."""
    values = np.asarray(values, dtype=float)
    if values.shape != (pair_count(n),):
        raise InvalidInput(
            f"expected {pair_count(n)} pair values for n={n}, got {values.shape}"
        )
    iu, ju = pair_indices(n)
    out = np.zeros((n, n))
    out[iu, ju] = values
    out[ju, iu] = values
    return out


@dataclass
class AllocationPlan:
    """Integer shot increments for one acquisition round.

    ``deltas`` is an M-vector of non-negative increments summing exactly to
    ``round_budget``.
    """

    deltas: np.ndarray
    round_budget: int

    def __post_init__(self):
        self.deltas = np.asarray(self.deltas, dtype=np.int64)
        self.round_budget = int(self.round_budget)
        if np.any(self.deltas < 0):
            raise InvalidInput("plan deltas must be non-negative")
        total = int(self.deltas.sum())
        if total != self.round_budget:
            raise InvalidInput(
                f"plan deltas sum to {total}, expected round budget {self.round_budget}"
            )


@dataclass
class ShotLedger:
    """Per-pair shot and success counts for an n-point training set."""

    n: int
    shots: np.ndarray
    successes: np.ndarray

    def __post_init__(self):
        self.shots = np.asarray(self.shots, dtype=np.int64)
        self.successes = np.asarray(self.successes, dtype=np.int64)
        m = pair_count(self.n)
        if self.shots.shape != (m,) or self.successes.shape != (m,):
            raise InvalidInput(
                f"ledger arrays must have length {m} for n={self.n}"
            )
        if np.any(self.successes < 0) or np.any(self.successes > self.shots):
            raise InvalidInput("successes must satisfy 0 <= c_p <= s_p")

    @classmethod
    def empty(cls, n: int) -> "ShotLedger":
        m = pair_count(n)
        return cls(n, np.zeros(m, dtype=np.int64), np.zeros(m, dtype=np.int64))

    def total_shots(self) -> int:
        return int(self.shots.sum())

    def copy(self) -> "ShotLedger":
        return ShotLedger(self.n, self.shots.copy(), self.successes.copy())

    def estimate(self, placeholder: float = 0.0) -> np.ndarray:
        """Empirical kernel estimate c_p / s_p, ``placeholder`` where s_p = 0."""
        vals = np.full(self.shots.shape, float(placeholder))
        sampled = self.shots > 0
        vals[sampled] = self.successes[sampled] / self.shots[sampled]
        return matrix_from_pairs(vals, self.n)

    def zero_shot_fraction(self) -> float:
        return float(np.mean(self.shots == 0))


def merge(ledger: ShotLedger, delta: ShotLedger) -> ShotLedger:
    """Elementwise sum of two ledgers (associative and commutative)."""
    if ledger.n != delta.n:
        raise InvalidInput("cannot merge ledgers of different sizes")
    return ShotLedger(
        ledger.n,
        ledger.shots + delta.shots,
        ledger.successes + delta.successes,
    )


def sample_shots(
    k_true: np.ndarray, plan: AllocationPlan, rng: np.random.Generator
) -> ShotLedger:
    """Draw Bernoulli shot outcomes for one plan against a ground-truth kernel.

    Per pair p the success increment is Binomial(deltas_p, K_p), independent
    across pairs; distributionally identical to deltas_p individual Bernoulli
    draws but vectorized.
    """
    k_true = np.asarray(k_true, dtype=float)
    n = k_true.shape[0]
    p = pairs_from_matrix(k_true)
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise InvalidInput("ground-truth kernel entries must lie in [0, 1]")
    if plan.deltas.shape != p.shape:
        raise InvalidInput("plan size does not match kernel pair count")
    successes = rng.binomial(plan.deltas, p)
    return ShotLedger(n, plan.deltas.copy(), successes.astype(np.int64))


def save_ledger_csv(ledger: ShotLedger, path) -> None:
    """Write pairs with s_p > 0 as rows ``i,j,shots,successes``."""
    iu, ju = pair_indices(ledger.n)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEDGER_HEADER)
        for p in np.nonzero(ledger.shots)[0]:
            writer.writerow(
                [int(iu[p]), int(ju[p]), int(ledger.shots[p]), int(ledger.successes[p])]
            )


def load_ledger_csv(path, n: int) -> ShotLedger:
    """Read a ledger written by :func:`save_ledger_csv` for a known n."""
    ledger = ShotLedger.empty(n)
    iu, ju = pair_indices(n)
    index_of = {(int(a), int(b)): p for p, (a, b) in enumerate(zip(iu, ju))}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LEDGER_HEADER:
            raise ParseError(f"bad ledger header {header!r}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 columns, got {len(row)}", line=lineno)
            try:
                i, j, s, c = (int(x) for x in row)
            except ValueError as exc:
                raise ParseError(f"non-integer field in {row!r}", line=lineno) from exc
            key = (min(i, j), max(i, j))
            if key not in index_of:
                raise ParseError(f"pair {key} out of range for n={n}", line=lineno)
            p = index_of[key]
            ledger.shots[p] += s
            ledger.successes[p] += c
    if np.any(ledger.successes > ledger.shots):
        raise ParseError("successes exceed shots after load")
    return ledger

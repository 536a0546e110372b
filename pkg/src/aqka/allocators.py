"""Shot-allocation strategies and the multi-round acquisition loop.

Includes the closed-form KKT targets, deterministic target fill, the uniform
/ random / multinomial / variance-only baselines, a support-block allocator,
random- and leverage-landmark low-rank allocators, the sensitivity-driven
round loop with exploration, and the landmark hybrid.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceFailure, DegenerateWeights, InvalidInput, NotPositiveDefinite
from .krr import (
    krr_fit,
    krr_gradient,
    krr_sensitivity,
    leverage_pair_scores,
    leverage_scores,
)
from .numerics import psd_project, symmetrize
from .shotsim import (
    AllocationPlan,
    ShotLedger,
    matrix_from_pairs,
    merge,
    pair_count,
    pair_indices,
    pairs_from_matrix,
    sample_shots,
)
from .svm import svm_envelope_gradient, svm_dual_solve

SENSITIVITY_MODES = ("estimated", "oracle", "leverage", "svm", "bernoulli")
FILL_RULES = ("target", "multinomial")


@dataclass
class AqkaConfig:
    """Round-loop hyperparameters; defaults follow the standard recipe."""

    budget: int
    rounds: int = 4
    warm_frac: float = 0.2
    explore_frac: float = 0.2
    ridge: float = 0.01
    sens_floor_frac: float = 0.05
    placeholder: float = 0.0
    known_diagonal: bool = False
    psd_floor: float = 1e-6
    svm_box: float = 5.0
    cumulative_targets: bool = True
    balanced_warmup: bool = False

    def __post_init__(self):
        if self.budget < 1:
            raise InvalidInput("budget must be >= 1")
        if self.rounds < 1:
            raise InvalidInput("rounds must be >= 1")
        if not 0.0 < self.warm_frac < 1.0:
            raise InvalidInput("warm_frac must be in (0, 1)")
        if not 0.0 <= self.explore_frac < 1.0:
            raise InvalidInput("explore_frac must be in [0, 1)")

    def with_budget(self, budget: int) -> "AqkaConfig":
        return replace(self, budget=int(budget))


@dataclass
class AllocatorResult:
    """Outcome of one allocation run against a shot backend."""

    final_estimate: np.ndarray
    ledger: ShotLedger
    per_round_plans: list
    method_tag: str
    meta: dict = field(default_factory=dict)


@dataclass
class BernoulliBackend:
    """Shot source that answers plans with Bernoulli draws from a fixed kernel."""

    kernel: np.ndarray

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=float)

    @property
    def n(self) -> int:
        return self.kernel.shape[0]

    @property
    def n_pairs(self) -> int:
        return pair_count(self.n)

    def sample(self, plan: AllocationPlan, rng: np.random.Generator) -> ShotLedger:
        return sample_shots(self.kernel, plan, rng)


# ---------------------------------------------------------------------------
# Integer rounding and plan construction primitives
# ---------------------------------------------------------------------------


def largest_remainder_round(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer vector proportional to ``weights`` summing exactly to ``total``.

    Floors the scaled weights, then hands the residue to the largest
    fractional remainders; ties break by index ascending.
    """
    weights = np.asarray(weights, dtype=float)
    if total < 0:
        raise InvalidInput("total must be >= 0")
    if np.any(weights < 0):
        raise InvalidInput("weights must be non-negative")
    s = weights.sum()
    if total == 0:
        return np.zeros(weights.shape, dtype=np.int64)
    if s <= 0:
        raise DegenerateWeights("cannot apportion a positive total over zero weights")
    scaled = weights * (total / s)
    base = np.floor(scaled).astype(np.int64)
    residue = total - int(base.sum())
    if residue > 0:
        frac = scaled - base
        # stable sort keeps index-ascending order among equal remainders
        order = np.argsort(-frac, kind="stable")
        base[order[:residue]] += 1
    return base


def kkt_targets(weights: np.ndarray, budget: float) -> np.ndarray:
    """Continuous variance-minimizing targets s*_p = (B/Z) sqrt(a_p).

    Z = sum_p sqrt(a_p); the resulting delta-method variance
    sum_p a_p / s*_p equals Z^2 / B on the support.
    """
    a = np.asarray(weights, dtype=float)
    if np.any(a < 0):
        raise InvalidInput("weights must be non-negative")
    root = np.sqrt(a)
    z = root.sum()
    if z <= 0:
        raise DegenerateWeights("all allocation weights are zero")
    return (budget / z) * root


RELATIVE_ZERO = 1e-9  # scores below this fraction of the max count as zero


def apply_sensitivity_floor(scores: np.ndarray, floor_frac: float) -> np.ndarray:
    """Raise active scores below ``floor_frac`` of the max up to that floor.

    Scores at numerical zero (below RELATIVE_ZERO of the max) stay zero:
    covering unsampled or zero-sensitivity pairs is the exploration mass's
    job, the floor only conditions the spread among active pairs.
    """
    scores = np.asarray(scores, dtype=float).copy()
    if floor_frac <= 0:
        return scores
    top = scores.max() if scores.size else 0.0
    if top <= 0:
        return scores
    scores[scores < RELATIVE_ZERO * top] = 0.0
    floor = floor_frac * top
    active = scores > 0
    scores[active & (scores < floor)] = floor
    return scores


def target_fill(
    s_star: np.ndarray, current: np.ndarray, round_budget: int
) -> AllocationPlan:
    """Deterministic fill toward targets: deltas prop. to max(0, s* - s).

    Deficits are rescaled to sum exactly to ``round_budget`` via
    largest-remainder rounding; with no deficits the budget spreads
    uniformly instead.
    """
    if round_budget < 0:
        raise InvalidInput("round budget must be >= 0")
    s_star = np.asarray(s_star, dtype=float)
    current = np.asarray(current, dtype=float)
    deficits = np.maximum(0.0, s_star - current)
    if round_budget == 0:
        return AllocationPlan(np.zeros(s_star.shape, dtype=np.int64), 0)
    if deficits.sum() <= 0:
        deltas = largest_remainder_round(np.ones(s_star.shape), round_budget)
    else:
        deltas = largest_remainder_round(deficits, round_budget)
    return AllocationPlan(deltas, round_budget)


def alloc_uniform(m_pairs: int, budget: int) -> AllocationPlan:
    """Equal shots per pair; the residue goes to the lowest pair indices."""
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    deltas = largest_remainder_round(np.ones(m_pairs), budget)
    return AllocationPlan(deltas, budget)


def alloc_random(m_pairs: int, budget: int, rng: np.random.Generator) -> AllocationPlan:
    """budget i.i.d. pair draws, uniform over pairs."""
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    deltas = rng.multinomial(budget, np.full(m_pairs, 1.0 / m_pairs))
    return AllocationPlan(deltas.astype(np.int64), budget)


def alloc_multinomial(
    scores: np.ndarray, budget: int, rng: np.random.Generator
) -> AllocationPlan:
    """budget categorical draws with probabilities proportional to ``scores``."""
    scores = np.asarray(scores, dtype=float)
    if np.any(scores < 0):
        raise InvalidInput("scores must be non-negative")
    if budget < 1:
        raise InvalidInput("budget must be >= 1")
    total = scores.sum()
    if total <= 0:
        raise DegenerateWeights("all multinomial scores are zero")
    deltas = rng.multinomial(budget, scores / total)
    return AllocationPlan(deltas.astype(np.int64), budget)


def alloc_bernoulli_only(k_hat: np.ndarray, budget: int) -> AllocationPlan:
    """Variance-only fill: targets proportional to sqrt(K(1-K)), no gradient."""
    k = np.clip(pairs_from_matrix(np.asarray(k_hat, dtype=float)), 0.0, 1.0)
    scores = np.sqrt(k * (1.0 - k))
    if scores.sum() <= 0:
        raise DegenerateWeights("variance scores are identically zero")
    targets = kkt_targets(scores**2, budget)
    return target_fill(targets, np.zeros_like(targets), budget)


# ---------------------------------------------------------------------------
# The round loop
# ---------------------------------------------------------------------------


def _split_budget(total: int, parts: int) -> np.ndarray:
    if total == 0:
        return np.zeros(parts, dtype=np.int64)
    return largest_remainder_round(np.ones(parts), total)


def _clamped_warm_budget(warm_frac: float, budget: int) -> int:
    warm = max(1, int(round(warm_frac * budget)))
    return min(warm, budget)


def _warmup_plan(m_pairs: int, warm_budget: int, mask: np.ndarray,
                 rng: np.random.Generator, balanced: bool = False) -> AllocationPlan:
    weights = mask.astype(float)
    if warm_budget == 0:
        return AllocationPlan(np.zeros(m_pairs, dtype=np.int64), 0)
    if balanced:
        deltas = largest_remainder_round(weights, warm_budget)
    else:
        deltas = rng.multinomial(warm_budget, weights / weights.sum()).astype(np.int64)
    return AllocationPlan(deltas, warm_budget)


def _pin_known_diagonal(estimate: np.ndarray) -> np.ndarray:
    out = estimate.copy()
    np.fill_diagonal(out, 1.0)
    return out


def _round_scores(
    k_proj: np.ndarray,
    k_pairs_raw: np.ndarray,
    y: np.ndarray,
    cfg: AqkaConfig,
    mode: str,
    oracle_weights: np.ndarray | None,
) -> np.ndarray:
    """sqrt of the allocation weights for one round, before floor/masking.

    Gradients come from a fit of the PSD-projected estimate, but the
    Bernoulli variance factor uses the raw per-pair estimates: a pair that
    was never sampled keeps the placeholder value and its variance proxy
    vanishes exactly, leaving its coverage to the exploration mass.
    """
    if mode == "oracle":
        return np.sqrt(oracle_weights)
    variance = np.sqrt(k_pairs_raw * (1.0 - k_pairs_raw))
    if mode == "bernoulli":
        return variance
    if mode == "leverage":
        lev = leverage_scores(k_proj, cfg.ridge)
        return leverage_pair_scores(lev, k_pairs_raw)
    if mode == "svm":
        try:
            fit = svm_dual_solve(k_proj, y, cfg.svm_box)
        except ConvergenceFailure as exc:  # plug-in duals on noisy estimates
            fit = exc.fit
        g = svm_envelope_gradient(fit, y)
        return np.abs(g) * variance
    # plug-in gradient from the current estimate
    fit = krr_fit(k_proj, y, cfg.ridge)
    g = krr_gradient(fit)
    field = krr_sensitivity(g, k_pairs_raw, cfg.ridge)
    return np.sqrt(field.weights)


def oracle_sensitivity_weights(
    k_true: np.ndarray, y: np.ndarray, ridge: float
) -> np.ndarray:
    """Allocation weights computed from the ground-truth kernel."""
    fit = krr_fit(np.asarray(k_true, dtype=float), np.asarray(y, dtype=float), ridge)
    g = krr_gradient(fit)
    return krr_sensitivity(g, pairs_from_matrix(k_true), ridge).weights


def aqka_run(
    backend: BernoulliBackend,
    y: np.ndarray,
    cfg: AqkaConfig,
    rng: np.random.Generator,
    sensitivity_mode: str = "estimated",
    fill_rule: str = "target",
) -> AllocatorResult:
    """Warm-up plus T sensitivity-weighted acquisition rounds.

    Each round estimates the kernel from the ledger, PSD-projects it, scores
    every pair by |g_p| sqrt(K_p(1-K_p)) for the selected sensitivity mode,
    fills shots toward the KKT targets on the exploit share of the round
    budget, and spends the exploration share uniformly at random. The
    ``multinomial`` fill rule replaces the deterministic fill with
    categorical draws of the exploit share from the same scores.
    """
    if sensitivity_mode not in SENSITIVITY_MODES:
        raise InvalidInput(f"unknown sensitivity mode {sensitivity_mode!r}")
    if fill_rule not in FILL_RULES:
        raise InvalidInput(f"unknown fill rule {fill_rule!r}")
    y = np.asarray(y, dtype=float)
    n = backend.n
    m_pairs = backend.n_pairs
    iu, ju = pair_indices(n)
    active = np.ones(m_pairs, dtype=bool)
    if cfg.known_diagonal:
        active = iu != ju

    oracle_weights = None
    if sensitivity_mode == "oracle":
        oracle_weights = oracle_sensitivity_weights(backend.kernel, y, cfg.ridge)

    warm_budget = _clamped_warm_budget(cfg.warm_frac, cfg.budget)
    round_budgets = _split_budget(cfg.budget - warm_budget, cfg.rounds)

    plans: list[AllocationPlan] = []
    meta: dict = {"mode": sensitivity_mode, "fill_rule": fill_rule, "rounds": []}

    plan = _warmup_plan(m_pairs, warm_budget, active, rng, cfg.balanced_warmup)
    ledger = backend.sample(plan, rng)
    plans.append(plan)

    spent = warm_budget
    for t, b_round in enumerate(round_budgets):
        b_round = int(b_round)
        if b_round == 0:
            continue
        estimate = ledger.estimate(cfg.placeholder)
        if cfg.known_diagonal:
            estimate = _pin_known_diagonal(estimate)
        k_proj = psd_project(estimate, cfg.psd_floor)
        k_pairs = np.clip(pairs_from_matrix(estimate), 0.0, 1.0)

        scores = _round_scores(k_proj, k_pairs, y, cfg, sensitivity_mode, oracle_weights)
        scores = np.where(active, scores, 0.0)
        scores = apply_sensitivity_floor(scores, cfg.sens_floor_frac)

        round_meta = {"round": t, "budget": b_round, "fallback": False}
        if scores.sum() <= 0:
            # degenerate sensitivity: spend the whole round uniformly
            round_meta["fallback"] = True
            round_plan = AllocationPlan(
                largest_remainder_round(active.astype(float), b_round), b_round
            )
            delta = backend.sample(round_plan, rng)
            ledger = merge(ledger, delta)
            plans.append(round_plan)
            meta["rounds"].append(round_meta)
            spent += b_round
            continue

        explore_budget = int(round(cfg.explore_frac * b_round))
        exploit_budget = b_round - explore_budget
        round_meta["z"] = float(np.sqrt((scores**2).sum()))
        if exploit_budget == 0:
            exploit_plan = AllocationPlan(np.zeros(m_pairs, dtype=np.int64), 0)
        elif fill_rule == "multinomial":
            exploit_plan = alloc_multinomial(scores, exploit_budget, rng)
        else:
            if cfg.cumulative_targets:
                target_budget = spent + b_round
            else:
                target_budget = b_round
            s_star = kkt_targets(scores**2, target_budget)
            deficits = np.maximum(0.0, s_star - ledger.shots)
            if deficits.sum() > 0:
                exploit_plan = AllocationPlan(
                    largest_remainder_round(deficits, exploit_budget), exploit_budget
                )
            else:
                # targets already met: top up along the prescribed profile
                exploit_plan = AllocationPlan(
                    largest_remainder_round(s_star, exploit_budget), exploit_budget
                )
        ledger = merge(ledger, backend.sample(exploit_plan, rng))
        plans.append(exploit_plan)
        if explore_budget > 0:
            explore_plan = AllocationPlan(
                rng.multinomial(explore_budget, active / active.sum()).astype(np.int64),
                explore_budget,
            )
            ledger = merge(ledger, backend.sample(explore_plan, rng))
            plans.append(explore_plan)
        spent += b_round
        meta["rounds"].append(round_meta)

    final = ledger.estimate(cfg.placeholder)
    if cfg.known_diagonal:
        final = _pin_known_diagonal(final)
    tag = f"aqka[{sensitivity_mode}/{fill_rule}]"
    return AllocatorResult(final, ledger, plans, tag, meta)


# ---------------------------------------------------------------------------
# Baselines that are not round loops
# ---------------------------------------------------------------------------


def run_single_plan(
    backend: BernoulliBackend,
    plan: AllocationPlan,
    rng: np.random.Generator,
    method_tag: str,
    placeholder: float = 0.0,
) -> AllocatorResult:
    ledger = backend.sample(plan, rng)
    return AllocatorResult(ledger.estimate(placeholder), ledger, [plan], method_tag)


def alloc_shofar(
    backend: BernoulliBackend,
    y: np.ndarray,
    budget: int,
    tau: float,
    cfg: AqkaConfig,
    rng: np.random.Generator,
) -> AllocatorResult:
    """Two-phase support-block allocator.

    Uniform warm-up, coefficient-threshold support identification
    S = {i : |alpha_i| > tau * max|alpha|}, then the remaining budget spreads
    uniformly over the S x S block; falls back to full uniform when the
    support comes out empty.
    """
    if not 0.0 < tau < 1.0:
        raise InvalidInput("tau must be in (0, 1)")
    n = backend.n
    m_pairs = backend.n_pairs
    warm_budget = min(_clamped_warm_budget(cfg.warm_frac, budget), budget - 1)
    warm_budget = max(warm_budget, 0)
    plan = _warmup_plan(m_pairs, warm_budget, np.ones(m_pairs, dtype=bool), rng,
                        cfg.balanced_warmup)
    ledger = backend.sample(plan, rng)
    plans = [plan]

    estimate = ledger.estimate(cfg.placeholder)
    k_proj = psd_project(estimate, cfg.psd_floor)
    fit = krr_fit(k_proj, np.asarray(y, dtype=float), cfg.ridge)
    amax = np.max(np.abs(fit.alpha))
    support = np.nonzero(np.abs(fit.alpha) > tau * amax)[0] if amax > 0 else np.array([], int)

    iu, ju = pair_indices(n)
    in_s = np.zeros(n, dtype=bool)
    in_s[support] = True
    block = in_s[iu] & in_s[ju]
    meta = {"tau": tau, "support_size": int(support.size),
            "support": support.tolist(), "fallback": False}
    if not block.any():
        block = np.ones(m_pairs, dtype=bool)
        meta["fallback"] = True
    rest = budget - warm_budget
    spend = AllocationPlan(largest_remainder_round(block.astype(float), rest), rest)
    ledger = merge(ledger, backend.sample(spend, rng))
    plans.append(spend)
    return AllocatorResult(
        ledger.estimate(cfg.placeholder), ledger, plans, f"shofar[tau={tau}]", meta
    )


def nystrom_reconstruct(
    k_nl: np.ndarray, k_ll: np.ndarray, ridge: float
) -> np.ndarray:
    """Low-rank completion K_NL (K_LL + ridge*I)^{-1} K_LN.

    The measured landmark block may be indefinite under shot noise, so the
    ridged system is solved by a general factorization; only a singular
    system raises NotPositiveDefinite.
    """
    k_nl = np.asarray(k_nl, dtype=float)
    k_ll = symmetrize(k_ll)
    try:
        mid = np.linalg.solve(k_ll + ridge * np.eye(k_ll.shape[0]), k_nl.T)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("landmark block plus ridge is singular") from exc
    return symmetrize(k_nl @ mid)


def _landmark_pairs(n: int, landmarks: np.ndarray) -> np.ndarray:
    iu, ju = pair_indices(n)
    touch = np.zeros(n, dtype=bool)
    touch[landmarks] = True
    return touch[iu] | touch[ju]


def _nystrom_readout(
    ledger: ShotLedger,
    landmarks: np.ndarray,
    touching: np.ndarray,
    ridge: float,
    placeholder: float,
) -> np.ndarray:
    direct = ledger.estimate(placeholder)
    k_nl = direct[:, landmarks]
    k_ll = direct[np.ix_(landmarks, landmarks)]
    recon = nystrom_reconstruct(k_nl, k_ll, ridge)
    out = recon
    iu, ju = pair_indices(ledger.n)
    sel_i, sel_j = iu[touching], ju[touching]
    vals = direct[sel_i, sel_j]
    out[sel_i, sel_j] = vals
    out[sel_j, sel_i] = vals
    return symmetrize(out)


def alloc_nystrom(
    backend: BernoulliBackend,
    budget: int,
    n_landmarks: int,
    ridge: float,
    rng: np.random.Generator,
    landmark_mode: str = "random",
    y: np.ndarray | None = None,
    warm_frac: float = 0.2,
    placeholder: float = 0.0,
    psd_floor: float = 1e-6,
) -> AllocatorResult:
    """Landmark allocator: measure pairs touching the landmark set, complete the rest.

    ``random`` draws landmarks uniformly; ``leverage`` spends a warm-up
    fraction uniformly first and takes the top ridge-leverage rows of the
    projected warm-up estimate; ``sensitivity_rows`` takes the top gradient
    row sums instead (requires labels).
    """
    n = backend.n
    if not 1 <= n_landmarks <= n:
        raise InvalidInput(f"landmark count must lie in [1, {n}]")
    m_pairs = backend.n_pairs
    plans: list[AllocationPlan] = []
    ledger = ShotLedger.empty(n)
    rest = budget

    if landmark_mode == "random":
        landmarks = np.sort(rng.choice(n, size=n_landmarks, replace=False))
    elif landmark_mode in ("leverage", "sensitivity_rows"):
        warm_budget = max(min(_clamped_warm_budget(warm_frac, budget), budget - 1), 0)
        plan = _warmup_plan(m_pairs, warm_budget, np.ones(m_pairs, dtype=bool), rng)
        ledger = merge(ledger, backend.sample(plan, rng))
        plans.append(plan)
        rest = budget - warm_budget
        k_proj = psd_project(ledger.estimate(placeholder), psd_floor)
        if landmark_mode == "leverage":
            row_scores = leverage_scores(k_proj, ridge)
        else:
            if y is None:
                raise InvalidInput("sensitivity_rows landmark mode requires labels")
            fit = krr_fit(k_proj, np.asarray(y, dtype=float), ridge)
            g_mat = matrix_from_pairs(krr_gradient(fit), n)
            row_scores = np.abs(g_mat).sum(axis=1)
        landmarks = np.sort(np.argsort(-row_scores, kind="stable")[:n_landmarks])
    else:
        raise InvalidInput(f"unknown landmark mode {landmark_mode!r}")

    touching = _landmark_pairs(n, landmarks)
    spend = AllocationPlan(largest_remainder_round(touching.astype(float), rest), rest)
    ledger = merge(ledger, backend.sample(spend, rng))
    plans.append(spend)

    final = _nystrom_readout(ledger, landmarks, touching, ridge, placeholder)
    meta = {"landmarks": landmarks.tolist(), "mode": landmark_mode}
    return AllocatorResult(
        final, ledger, plans, f"nystrom[{landmark_mode},m={n_landmarks}]", meta
    )


def alloc_hybrid(
    backend: BernoulliBackend,
    y: np.ndarray,
    budget: int,
    n_landmarks: int,
    cfg: AqkaConfig,
    rng: np.random.Generator,
) -> AllocatorResult:
    """Landmark hybrid: gradient row-sums pick landmarks, sensitivity-weighted
    fill covers the landmark-touching block, low-rank completion fills the rest.

    Falls back to random landmarks when the warm-up gradient is identically
    zero.
    """
    n = backend.n
    if not 1 <= n_landmarks <= n:
        raise InvalidInput(f"landmark count must lie in [1, {n}]")
    m_pairs = backend.n_pairs
    y = np.asarray(y, dtype=float)

    warm_budget = max(min(_clamped_warm_budget(cfg.warm_frac, budget), budget - 1), 0)
    plan = _warmup_plan(m_pairs, warm_budget, np.ones(m_pairs, dtype=bool), rng,
                        cfg.balanced_warmup)
    ledger = backend.sample(plan, rng)
    plans = [plan]

    estimate = ledger.estimate(cfg.placeholder)
    k_proj = psd_project(estimate, cfg.psd_floor)
    k_pairs = np.clip(pairs_from_matrix(estimate), 0.0, 1.0)
    fit = krr_fit(k_proj, y, cfg.ridge)
    g = krr_gradient(fit)
    g_mat = matrix_from_pairs(g, n)
    row_sums = np.abs(g_mat).sum(axis=1)
    meta = {"fallback_random_landmarks": False}
    if row_sums.sum() <= 0:
        meta["fallback_random_landmarks"] = True
        landmarks = np.sort(rng.choice(n, size=n_landmarks, replace=False))
    else:
        landmarks = np.sort(np.argsort(-row_sums, kind="stable")[:n_landmarks])
    meta["landmarks"] = landmarks.tolist()

    touching = _landmark_pairs(n, landmarks)
    scores = np.abs(g) * np.sqrt(k_pairs * (1.0 - k_pairs))
    scores = apply_sensitivity_floor(scores, cfg.sens_floor_frac)
    scores = np.where(touching, scores, 0.0)
    rest = budget - warm_budget
    deficits = np.zeros(m_pairs)
    if scores.sum() > 0:
        targets = kkt_targets(scores**2, rest)
        deficits = np.where(touching, np.maximum(0.0, targets - ledger.shots), 0.0)
    if deficits.sum() <= 0:
        # no in-block deficit: spread the remainder uniformly over the block
        spend = AllocationPlan(
            largest_remainder_round(touching.astype(float), rest), rest
        )
    else:
        spend = AllocationPlan(largest_remainder_round(deficits, rest), rest)
    ledger = merge(ledger, backend.sample(spend, rng))
    plans.append(spend)

    final = _nystrom_readout(ledger, landmarks, touching, cfg.ridge, cfg.placeholder)
    return AllocatorResult(
        final, ledger, plans, f"hybrid[m={n_landmarks}]", meta
    )

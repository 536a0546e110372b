import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from aqka.errors import InvalidInput, ParseError
from aqka.shotsim import (
    AllocationPlan,
    ShotLedger,
    load_ledger_csv,
    matrix_from_pairs,
    merge,
    pair_count,
    pair_indices,
    pairs_from_matrix,
    sample_shots,
    save_ledger_csv,
)


def small_kernel():
    return np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.3], [0.2, 0.3, 1.0]])


class TestPairIndexing:
    def test_pair_count(self):
        assert pair_count(3) == 6
        assert pair_count(225) == 25425

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        vals = rng.random(pair_count(5))
        m = matrix_from_pairs(vals, 5)
        assert np.array_equal(m, m.T)
        np.testing.assert_array_equal(pairs_from_matrix(m), vals)


class TestPlan:
    def test_sum_enforced(self):
        with pytest.raises(InvalidInput):
            AllocationPlan(np.array([1, 2, 3]), 7)

    def test_negative_rejected(self):
        with pytest.raises(InvalidInput):
            AllocationPlan(np.array([-1, 2]), 1)


class TestSampling:
    def test_degenerate_zero(self):
        k = np.zeros((2, 2))
        plan = AllocationPlan(np.array([5, 5, 5]), 15)
        led = sample_shots(k, plan, np.random.default_rng(0))
        assert led.successes.sum() == 0

    def test_degenerate_one(self):
        k = np.ones((2, 2))
        plan = AllocationPlan(np.array([5, 5, 5]), 15)
        led = sample_shots(k, plan, np.random.default_rng(0))
        np.testing.assert_array_equal(led.successes, led.shots)

    def test_out_of_range_rejected(self):
        k = np.full((2, 2), 1.5)
        plan = AllocationPlan(np.array([1, 1, 1]), 3)
        with pytest.raises(InvalidInput):
            sample_shots(k, plan, np.random.default_rng(0))

    def test_law_of_large_numbers(self):
        # K_p = 0.5 at 1e6 shots: mean within 0.002, batch variance within 5%
        k = np.full((1, 1), 0.5)
        rng = np.random.default_rng(42)
        n_batches, per_batch = 1000, 1000
        plan = AllocationPlan(np.array([per_batch]), per_batch)
        means = np.array(
            [sample_shots(k, plan, rng).successes[0] / per_batch for _ in range(n_batches)]
        )
        assert abs(means.mean() - 0.5) < 0.002
        expected_var = 0.5 * 0.5 / per_batch
        assert abs(means.var() - expected_var) / expected_var < 0.05

    def test_unbiasedness(self):
        k = small_kernel()
        m = pair_count(3)
        plan = AllocationPlan(np.full(m, 25), 25 * m)
        rng = np.random.default_rng(7)
        reps = 10_000
        p = pairs_from_matrix(k)
        draws = rng.binomial(np.tile(plan.deltas, (reps, 1)), p[None, :]) / 25.0
        mean = draws.mean(axis=0)
        se = np.sqrt(p * (1 - p) / 25.0 / reps)
        assert np.all(np.abs(mean - p) <= 3.0 * np.maximum(se, 1e-12))

    def test_variance_matches_bernoulli(self):
        # Var[K_hat] = K(1-K)/s within 10% at s=100, K=0.3
        rng = np.random.default_rng(11)
        reps, s, kval = 10_000, 100, 0.3
        draws = rng.binomial(s, kval, size=reps) / s
        expected = kval * (1 - kval) / s
        assert abs(draws.var() - expected) / expected < 0.10

    def test_binomial_equals_bernoulli_sum_chisq(self):
        # goodness of fit of binomial sampling against the Binomial(20, 0.3) pmf
        k = np.full((1, 1), 0.3)
        plan = AllocationPlan(np.array([20]), 20)
        rng = np.random.default_rng(5)
        counts = np.array([sample_shots(k, plan, rng).successes[0] for _ in range(4000)])
        observed = np.bincount(counts, minlength=21)
        expected = scipy.stats.binom.pmf(np.arange(21), 20, 0.3) * 4000
        keep = expected > 5
        stat, pvalue = scipy.stats.chisquare(
            observed[keep], expected[keep] * observed[keep].sum() / expected[keep].sum()
        )
        assert pvalue > 1e-3


class TestLedger:
    def test_estimate_empty(self):
        led = ShotLedger.empty(3)
        np.testing.assert_array_equal(led.estimate(0.0), np.zeros((3, 3)))

    def test_estimate_placeholder(self):
        led = ShotLedger.empty(2)
        est = led.estimate(0.25)
        np.testing.assert_allclose(est, np.full((2, 2), 0.25))

    def test_all_successes(self):
        m = pair_count(3)
        led = ShotLedger(3, np.full(m, 4), np.full(m, 4))
        np.testing.assert_array_equal(led.estimate(0.0), np.ones((3, 3)))

    def test_merge_identity_and_commutativity(self):
        rng = np.random.default_rng(1)
        k = small_kernel()
        deltas = rng.integers(0, 5, pair_count(3))
        plan = AllocationPlan(deltas, int(deltas.sum()))
        a = sample_shots(k, plan, np.random.default_rng(2))
        b = sample_shots(k, plan, np.random.default_rng(3))
        zero = ShotLedger.empty(3)
        assert np.array_equal(merge(a, zero).shots, a.shots)
        ab, ba = merge(a, b), merge(b, a)
        assert np.array_equal(ab.shots, ba.shots)
        assert np.array_equal(ab.successes, ba.successes)

    def test_merge_additivity_of_estimates(self):
        k = small_kernel()
        rng = np.random.default_rng(4)
        m = pair_count(3)
        p1 = AllocationPlan(np.full(m, 50), 50 * m)
        p2 = AllocationPlan(np.full(m, 70), 70 * m)
        a = sample_shots(k, p1, rng)
        b = sample_shots(k, p2, rng)
        merged = merge(a, b)
        manual = ShotLedger(3, a.shots + b.shots, a.successes + b.successes)
        np.testing.assert_allclose(merged.estimate(0.0), manual.estimate(0.0))

    def test_total_shots_bookkeeping(self):
        k = small_kernel()
        rng = np.random.default_rng(9)
        ledger = ShotLedger.empty(3)
        budgets = [10, 33, 7]
        for b in budgets:
            deltas = rng.multinomial(b, np.full(pair_count(3), 1 / pair_count(3)))
            ledger = merge(ledger, sample_shots(k, AllocationPlan(deltas, b), rng))
        assert ledger.total_shots() == sum(budgets)

    def test_invalid_counts_rejected(self):
        with pytest.raises(InvalidInput):
            ShotLedger(2, np.array([1, 1, 1]), np.array([2, 0, 0]))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2**31))
    def test_merge_associative(self, seed):
        rng = np.random.default_rng(seed)
        m = pair_count(4)
        leds = []
        for _ in range(3):
            shots = rng.integers(0, 6, m)
            succ = rng.integers(0, shots + 1)
            leds.append(ShotLedger(4, shots, succ))
        left = merge(merge(leds[0], leds[1]), leds[2])
        right = merge(leds[0], merge(leds[1], leds[2]))
        assert np.array_equal(left.shots, right.shots)
        assert np.array_equal(left.successes, right.successes)


class TestLedgerCsv:
    def test_round_trip(self, tmp_path):
        k = small_kernel()
        rng = np.random.default_rng(0)
        deltas = rng.integers(0, 4, pair_count(3))
        plan = AllocationPlan(deltas, int(deltas.sum()))
        led = sample_shots(k, plan, rng)
        path = tmp_path / "ledger.csv"
        save_ledger_csv(led, path)
        loaded = load_ledger_csv(path, 3)
        assert np.array_equal(loaded.shots, led.shots)
        assert np.array_equal(loaded.successes, led.successes)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n")
        with pytest.raises(ParseError):
            load_ledger_csv(path, 3)

    def test_bad_row_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("i,j,shots,successes\n0,1,x,0\n")
        with pytest.raises(ParseError) as exc:
            load_ledger_csv(path, 3)
        assert exc.value.line == 2

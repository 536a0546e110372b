import numpy as np
import pytest

from aqka.errors import InvalidInput, NotPositiveDefinite
from aqka.kernels import planted_sparse_target, rbf_kernel, standardized_gaussian_features
from aqka.krr import (
    gauss_newton_diag,
    krr_fit,
    krr_gradient,
    krr_sensitivity,
    leverage_pair_scores,
    leverage_scores,
    predict_and_score,
    remainder_envelope,
    training_loss,
)
from aqka.numerics import symmetrize
from aqka.shotsim import diagonal_mask, pair_indices, pairs_from_matrix


def random_spd(n, rng, scale=1.0):
    a = rng.standard_normal((n, n))
    return symmetrize(a @ a.T / n + scale * np.eye(n))


def perturbation(n, i, j):
    e = np.zeros((n, n))
    e[i, j] = 1.0
    e[j, i] = 1.0
    if i == j:
        e[i, i] = 1.0
    return e


class TestFit:
    def test_identity_kernel(self):
        y = np.array([1.0, -1.0, 2.0])
        fit = krr_fit(np.eye(3), y, ridge=1.0)
        np.testing.assert_allclose(fit.alpha, y / 2.0)
        assert fit.loss == pytest.approx(np.dot(y, y) / 4.0)

    def test_planted_recovery(self):
        rng = np.random.default_rng(0)
        x = standardized_gaussian_features(30, 4, rng)
        k = rbf_kernel(x, 0.1)
        target = planted_sparse_target(k, 5, 0.01, rng)
        fit = krr_fit(k, target.y, 0.01)
        np.testing.assert_allclose(fit.alpha, target.coeffs, atol=1e-8)

    def test_loss_two_formulas(self):
        rng = np.random.default_rng(1)
        k = random_spd(12, rng)
        y = rng.standard_normal(12)
        fit = krr_fit(k, y, 0.3)
        direct = training_loss(k, y, fit.alpha)
        assert abs(fit.loss - direct) <= 1e-8 * max(direct, 1e-30)

    def test_beta_invariant(self):
        rng = np.random.default_rng(2)
        k = random_spd(9, rng)
        y = rng.standard_normal(9)
        fit = krr_fit(k, y, 0.2)
        lhs = (k + 0.2 * np.eye(9)) @ fit.beta
        assert np.linalg.norm(lhs - fit.alpha) <= 1e-8 * np.linalg.norm(fit.alpha)

    def test_indefinite_kernel_raises(self):
        with pytest.raises(NotPositiveDefinite):
            krr_fit(np.diag([1.0, -5.0]), np.ones(2), 0.01)

    def test_nonpositive_ridge_rejected(self):
        with pytest.raises(InvalidInput):
            krr_fit(np.eye(2), np.ones(2), 0.0)


class TestGradient:
    def test_matches_central_differences(self):
        rng = np.random.default_rng(3)
        n, lam, eps = 10, 0.5, 1e-5
        k = random_spd(n, rng)
        y = rng.standard_normal(n)
        fit = krr_fit(k, y, lam)
        g = krr_gradient(fit)
        iu, ju = pair_indices(n)
        for p in range(len(g)):
            e = perturbation(n, iu[p], ju[p])
            fd = (krr_fit(k + eps * e, y, lam).loss - krr_fit(k - eps * e, y, lam).loss) / (2 * eps)
            assert abs(fd - g[p]) <= 1e-5 * max(abs(g[p]), 1e-10)

    def test_vanishes_off_support(self):
        fit = krr_fit(np.eye(4), np.zeros(4), 0.5)
        assert np.all(krr_gradient(fit) == 0.0)

    def test_sign_for_positive_coefficients(self):
        rng = np.random.default_rng(4)
        k = random_spd(8, rng)
        y = np.abs(rng.standard_normal(8)) + 0.5
        fit = krr_fit(k, y, 2.0)
        if np.all(fit.alpha > 0) and np.all(fit.beta > 0):
            assert np.all(krr_gradient(fit) < 0)

    def test_support_strip(self):
        # with sparse coefficients every non-negligible gradient touches the support
        rng = np.random.default_rng(5)
        n, m = 30, 4
        x = standardized_gaussian_features(n, 4, rng)
        k = rbf_kernel(x, 0.1)
        target = planted_sparse_target(k, m, 0.01, rng)
        fit = krr_fit(k, target.y, 0.01)
        g = krr_gradient(fit)
        iu, ju = pair_indices(n)
        in_s = np.zeros(n, dtype=bool)
        in_s[target.anchors] = True
        big = np.abs(g) > 1e-10 * np.max(np.abs(g))
        assert np.all(in_s[iu[big]] | in_s[ju[big]])
        strip_count = np.sum(in_s[iu] | in_s[ju])
        assert strip_count == m * (2 * n - m + 1) // 2


class TestSensitivity:
    def test_extreme_entries_vanish(self):
        g = np.array([1.0, -2.0, 3.0])
        field = krr_sensitivity(g, np.array([0.0, 1.0, 0.5]), ridge=0.1)
        np.testing.assert_allclose(field.weights, [0.0, 0.0, 9.0 * 0.25])

    def test_zero_gradient(self):
        field = krr_sensitivity(np.zeros(3), np.full(3, 0.5), ridge=0.1)
        assert np.all(field.weights == 0.0)

    def test_homogeneity(self):
        rng = np.random.default_rng(6)
        g = rng.standard_normal(10)
        k = rng.random(10)
        a1 = krr_sensitivity(g, k, 0.1).weights
        a2 = krr_sensitivity(3.0 * g, k, 0.1).weights
        np.testing.assert_allclose(a2, 9.0 * a1)

    def test_proxy_relation_exact(self):
        rng = np.random.default_rng(7)
        lam = 0.07
        g = rng.standard_normal(15)
        field = krr_sensitivity(g, rng.random(15), lam)
        # exact up to one rounding of the divide/multiply pair
        np.testing.assert_allclose(field.proxy * 4.0 * lam**4, g**2, rtol=1e-15)

    def test_clipping_guards_placeholders(self):
        field = krr_sensitivity(np.ones(2), np.array([-0.5, 1.5]), 0.1)
        np.testing.assert_allclose(field.weights, [0.0, 0.0])


class TestGaussNewton:
    def test_second_difference_oracle(self):
        rng = np.random.default_rng(8)
        n, lam, eps = 8, 0.5, 1e-4
        k = random_spd(n, rng)
        y = rng.standard_normal(n)
        fit = krr_fit(k, y, lam)
        h_gn, rem = gauss_newton_diag(fit, k)
        iu, ju = pair_indices(n)
        l0 = fit.loss
        for p in range(len(h_gn)):
            e = perturbation(n, iu[p], ju[p])
            lp = krr_fit(k + eps * e, y, lam).loss
            lm = krr_fit(k - eps * e, y, lam).loss
            fd2 = (lp - 2 * l0 + lm) / eps**2
            pred = h_gn[p] + rem[p]
            assert abs(fd2 - pred) <= 1e-3 * max(abs(pred), 1e-8)

    def test_nonnegative_and_support(self):
        rng = np.random.default_rng(9)
        k = random_spd(10, rng)
        y = rng.standard_normal(10)
        fit = krr_fit(k, y, 0.4)
        h_gn, rem = gauss_newton_diag(fit, k)
        assert np.all(h_gn >= 0.0)
        # zero coefficients kill both terms
        fit0 = krr_fit(np.eye(4), np.zeros(4), 0.5)
        h0, r0 = gauss_newton_diag(fit0, np.eye(4))
        assert np.all(h0 == 0.0) and np.all(r0 == 0.0)

    def test_remainder_envelope(self):
        rng = np.random.default_rng(10)
        k = random_spd(12, rng)
        y = rng.standard_normal(12)
        fit = krr_fit(k, y, 0.6)
        _, rem = gauss_newton_diag(fit, k)
        env = remainder_envelope(fit, float(np.linalg.norm(y)))
        assert np.all(np.abs(rem) <= env + 1e-12)

    def test_proxy_cauchy_schwarz_domination(self):
        # h_p <= H_p * ||alpha||^2 / (2 lam^2): the proxies differ by a
        # positive kernel-dependent scalar
        rng = np.random.default_rng(11)
        for seed in range(5):
            r = np.random.default_rng(seed)
            n, lam = 12, 0.3
            k = random_spd(n, r)
            y = r.standard_normal(n)
            fit = krr_fit(k, y, lam)
            g = krr_gradient(fit)
            field = krr_sensitivity(g, pairs_from_matrix(np.clip(k, 0, 1)), lam)
            h_gn, _ = gauss_newton_diag(fit, k)
            bound = h_gn * np.dot(fit.alpha, fit.alpha) / (2.0 * lam**2)
            assert np.all(field.proxy <= bound + 1e-12)


class TestLeverage:
    def test_identity_kernel(self):
        lev = leverage_scores(np.eye(5), ridge=1.0)
        np.testing.assert_allclose(lev, np.full(5, 0.5))

    def test_large_ridge_limit(self):
        rng = np.random.default_rng(12)
        k = random_spd(6, rng)
        lev = leverage_scores(k, ridge=1e9)
        assert np.all(lev < 1e-6)

    def test_trace_identity(self):
        rng = np.random.default_rng(13)
        k = random_spd(9, rng)
        lam = 0.2
        lev = leverage_scores(k, lam)
        a_inv = np.linalg.inv(k + lam * np.eye(9))
        assert lev.sum() == pytest.approx(np.trace(k @ a_inv), rel=1e-10)

    def test_pair_scores(self):
        lev = np.array([0.5, 0.25])
        k_pairs = np.array([1.0, 0.5, 1.0])
        scores = leverage_pair_scores(lev, k_pairs)
        np.testing.assert_allclose(scores, [0.0, 0.75 * 0.5, 0.0])


class TestScoring:
    def test_zero_predictor_sign_convention(self):
        y_test = np.array([1.0, -1.0, 1.0, 1.0])
        acc, mse = predict_and_score(np.zeros((4, 3)), np.zeros(3), y_test)
        assert acc == pytest.approx(0.75)  # sign(0) counts as +1
        assert mse == pytest.approx(1.0)

    def test_perfect_predictions(self):
        k_test = np.eye(3)
        alpha = np.array([2.0, -1.0, 0.5])
        acc, mse = predict_and_score(k_test, alpha, np.array([1.0, -1.0, 1.0]), alpha)
        assert acc == 1.0
        assert mse == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            predict_and_score(np.zeros((2, 3)), np.zeros(4), np.zeros(2))

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aqka.errors import InvalidInput, NotPositiveDefinite
from aqka.numerics import (
    RECONSTRUCT_RTOL,
    SOLVE_RTOL,
    opnorm,
    psd_project,
    solve_spd,
    sym_eig,
    symmetrize,
)


def random_symmetric(n: int, rng) -> np.ndarray:
    return symmetrize(rng.standard_normal((n, n)))


def random_spd(n: int, rng) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return symmetrize(a @ a.T / n + np.eye(n))


class TestSymEig:
    def test_identity(self):
        w, _ = sym_eig(np.eye(3))
        np.testing.assert_allclose(w, [1.0, 1.0, 1.0])

    def test_diagonal_sorted_ascending(self):
        w, _ = sym_eig(np.diag([2.0, -1.0]))
        np.testing.assert_allclose(w, [-1.0, 2.0])

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(0)
        m = random_symmetric(8, rng)
        w, v = sym_eig(m)
        recon = (v * w) @ v.T
        assert np.linalg.norm(recon - m) <= RECONSTRUCT_RTOL * np.linalg.norm(m)
        assert np.linalg.norm(v.T @ v - np.eye(8)) < 1e-10

    def test_non_finite_rejected(self):
        m = np.eye(2)
        m[0, 1] = np.nan
        with pytest.raises(InvalidInput):
            sym_eig(m)

    def test_non_square_rejected(self):
        with pytest.raises(InvalidInput):
            sym_eig(np.ones((2, 3)))


class TestSolveSpd:
    def test_identity_solve(self):
        x = solve_spd(np.eye(2), np.array([3.0, -1.0]))
        np.testing.assert_allclose(x, [3.0, -1.0])

    def test_pure_ridge_solve(self):
        x = solve_spd(np.zeros((2, 2)), np.array([1.0, 1.0]), ridge=0.5)
        np.testing.assert_allclose(x, [2.0, 2.0])

    def test_residual_contract(self):
        rng = np.random.default_rng(1)
        m = random_spd(10, rng)
        rhs = rng.standard_normal(10)
        x = solve_spd(m, rhs, ridge=0.0)
        res = np.linalg.norm(m @ x - rhs) / np.linalg.norm(rhs)
        assert res < SOLVE_RTOL

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefinite):
            solve_spd(np.diag([1.0, -1.0]), np.ones(2))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=50), st.integers(min_value=0, max_value=2**31))
    def test_residual_property(self, n, seed):
        rng = np.random.default_rng(seed)
        m = random_spd(n, rng)
        rhs = rng.standard_normal(n)
        ridge = float(rng.uniform(0, 1))
        x = solve_spd(m, rhs, ridge)
        res = np.linalg.norm((m + ridge * np.eye(n)) @ x - rhs)
        assert res < SOLVE_RTOL * max(np.linalg.norm(rhs), 1e-30)


class TestPsdProject:
    def test_already_psd_unchanged(self):
        m = np.eye(4)
        out = psd_project(m, 1e-6)
        assert np.array_equal(out, m)

    def test_clips_one_eigenvalue(self):
        out = psd_project(np.diag([1.0, -0.5]), 1e-6)
        w = np.linalg.eigvalsh(out)
        np.testing.assert_allclose(sorted(w), [1e-6, 1.0], atol=1e-12)

    def test_floor_and_contraction(self):
        rng = np.random.default_rng(2)
        m = random_symmetric(12, rng)
        floor = 1e-6
        out = psd_project(m, floor)
        w_in = np.linalg.eigvalsh(m)
        assert np.linalg.eigvalsh(out)[0] >= floor - 1e-12
        neg_part = max(0.0, -w_in[0])
        assert opnorm(out - m) <= 2.0 * neg_part + 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=1, max_value=20), st.integers(min_value=0, max_value=2**31))
    def test_idempotent(self, n, seed):
        rng = np.random.default_rng(seed)
        m = random_symmetric(n, rng)
        once = psd_project(m, 1e-6)
        twice = psd_project(once, 1e-6)
        assert np.max(np.abs(twice - once)) < 1e-12


def test_opnorm_matches_svd():
    rng = np.random.default_rng(3)
    m = random_symmetric(7, rng)
    assert opnorm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-12)

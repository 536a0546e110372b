import numpy as np
import pytest

from aqka.errors import EmptyDataset, InvalidInput, ParseError
from aqka.kernels import (
    Dataset,
    FeatureMapConfig,
    check_kernel_matrix,
    haar_adhoc_labels,
    haar_unitary,
    load_dataset_csv,
    planted_labels,
    planted_sparse_target,
    rbf_kernel,
    save_dataset_csv,
    standardized_gaussian_features,
    verify_planted_recovery,
    zz_fidelity_kernel,
)
from aqka.numerics import solve_spd


class TestRbf:
    def test_unit_diagonal(self):
        rng = np.random.default_rng(0)
        k = rbf_kernel(rng.standard_normal((6, 3)), gamma=0.1)
        np.testing.assert_array_equal(np.diag(k), np.ones(6))

    def test_duplicate_points(self):
        x = np.array([[1.0, 2.0], [1.0, 2.0]])
        k = rbf_kernel(x, gamma=0.3)
        assert k[0, 1] == pytest.approx(1.0)

    def test_hand_value(self):
        k = rbf_kernel(np.array([[0.0], [1.0]]), gamma=1.0)
        assert k[0, 1] == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_bad_gamma(self):
        with pytest.raises(InvalidInput):
            rbf_kernel(np.zeros((2, 1)), gamma=0.0)

    def test_cross_kernel_shape(self):
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal((4, 2)), rng.standard_normal((7, 2))
        k = rbf_kernel(a, 0.2, b)
        assert k.shape == (4, 7)

    def test_generated_kernel_contract(self):
        rng = np.random.default_rng(2)
        k = rbf_kernel(rng.standard_normal((10, 4)), 0.05)
        check_kernel_matrix(k)


class TestZzKernel:
    def test_identical_rows_give_one(self):
        rng = np.random.default_rng(3)
        cfg = FeatureMapConfig(3, 2)
        x = rng.uniform(0, 2 * np.pi, (4, 3))
        k = zz_fidelity_kernel(x, x[:2].copy(), cfg)
        assert k[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert k[1, 1] == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(4)
        cfg = FeatureMapConfig(4, 2)
        x = rng.uniform(0, 2 * np.pi, (8, 4))
        k = zz_fidelity_kernel(x, None, cfg)
        assert np.array_equal(k, k.T)
        check_kernel_matrix(k)

    def test_single_qubit_closed_form(self):
        # one qubit, depth 1: |<psi(b)|psi(a)>|^2 = cos^2(a - b)
        rng = np.random.default_rng(5)
        cfg = FeatureMapConfig(1, 1)
        x = rng.uniform(0, 2 * np.pi, (7, 1))
        k = zz_fidelity_kernel(x, None, cfg)
        expected = np.cos(x[:, 0][:, None] - x[:, 0][None, :]) ** 2
        np.fill_diagonal(expected, 1.0)
        np.testing.assert_allclose(k, expected, atol=1e-12)

    def test_two_qubit_closed_form(self):
        # depth 1, two qubits, by hand: after H-layer, single-qubit phases
        # 2*x_t on bit t, and the odd-parity phase 2(pi-x0)(pi-x1), the state
        # is (1/2)[1, e^{i(2x0+phi)}, e^{i(2x1+phi)}, e^{i2(x0+x1)}]
        rng = np.random.default_rng(21)
        cfg = FeatureMapConfig(2, 1)
        x = rng.uniform(0, 2 * np.pi, (5, 2))

        def state(row):
            phi = 2.0 * (np.pi - row[0]) * (np.pi - row[1])
            phases = np.array(
                [0.0, 2 * row[0] + phi, 2 * row[1] + phi, 2 * (row[0] + row[1])]
            )
            return 0.5 * np.exp(1j * phases)

        expected = np.zeros((5, 5))
        for a in range(5):
            for b in range(5):
                expected[a, b] = np.abs(np.vdot(state(x[b]), state(x[a]))) ** 2
        np.fill_diagonal(expected, 1.0)
        k = zz_fidelity_kernel(x, None, cfg)
        np.testing.assert_allclose(k, expected, atol=1e-12)

    def test_concentration_at_150_points(self):
        rng = np.random.default_rng(6)
        cfg = FeatureMapConfig(4, 2)
        x = rng.uniform(0, 2 * np.pi, (150, 4))
        k = zz_fidelity_kernel(x, None, cfg)
        off = k[~np.eye(150, dtype=bool)]
        assert 0.03 <= off.mean() <= 0.15

    def test_dimension_mismatch(self):
        cfg = FeatureMapConfig(4, 2)
        with pytest.raises(InvalidInput):
            zz_fidelity_kernel(np.zeros((3, 3)), None, cfg)

    def test_qubit_cap(self):
        with pytest.raises(InvalidInput):
            FeatureMapConfig(13, 1)


class TestPlanted:
    @pytest.fixture
    def instance(self):
        rng = np.random.default_rng(7)
        x = standardized_gaussian_features(40, 5, rng)
        k = rbf_kernel(x, 0.1)
        return k, rng

    def test_recovery(self, instance):
        k, rng = instance
        target = planted_sparse_target(k, m=6, ridge=0.01, rng=rng)
        assert verify_planted_recovery(k, target, 0.01)

    def test_support_exact(self, instance):
        k, rng = instance
        target = planted_sparse_target(k, m=6, ridge=0.01, rng=rng)
        alpha = solve_spd(k, target.y, 0.01)
        off = np.setdiff1d(np.arange(40), target.anchors)
        assert np.all(np.abs(alpha[off]) < 1e-8)

    def test_full_support_degenerate(self, instance):
        k, rng = instance
        target = planted_sparse_target(k, m=40, ridge=0.01, rng=rng)
        assert target.anchors.size == 40
        assert np.all(target.coeffs != 0)

    def test_oracle_accuracy_one(self, instance):
        k, rng = instance
        target = planted_sparse_target(k, m=6, ridge=0.01, rng=rng)
        x_test = standardized_gaussian_features(20, 5, rng)
        # reuse the train features' kernel against fresh points
        k_test = rbf_kernel(x_test, 0.1, standardized_gaussian_features(40, 5, np.random.default_rng(7)))
        labels = planted_labels(k_test, target.coeffs)
        pred = np.where(k_test @ target.coeffs >= 0, 1.0, -1.0)
        assert np.mean(pred == labels) == 1.0

    def test_m_out_of_range(self, instance):
        k, rng = instance
        with pytest.raises(InvalidInput):
            planted_sparse_target(k, m=41, ridge=0.01, rng=rng)


class TestHaar:
    def test_unitary(self):
        v = haar_unitary(8, np.random.default_rng(8))
        np.testing.assert_allclose(v @ v.conj().T, np.eye(8), atol=1e-12)

    def test_labels_balanced_and_all_kept(self):
        rng = np.random.default_rng(9)
        cfg = FeatureMapConfig(3, 2)
        x = rng.uniform(0, 2 * np.pi, (101, 3))
        labels, kept = haar_adhoc_labels(x, cfg, margin_frac=0.0, rng=rng)
        assert kept.size == 101
        assert abs(np.sum(labels == 1) - np.sum(labels == -1)) <= 1

    def test_margin_filter_drops_points(self):
        rng = np.random.default_rng(10)
        cfg = FeatureMapConfig(4, 2)
        x = rng.uniform(0, 2 * np.pi, (200, 4))
        _, kept = haar_adhoc_labels(x, cfg, margin_frac=0.15, rng=rng)
        assert 0 < kept.size < 200

    def test_all_dropped(self):
        rng = np.random.default_rng(11)
        cfg = FeatureMapConfig(2, 1)
        x = rng.uniform(0, 2 * np.pi, (20, 2))
        with pytest.raises(EmptyDataset):
            haar_adhoc_labels(x, cfg, margin_frac=1e9, rng=rng)


class TestDatasetCsv:
    def test_zero_one_label_mapping(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f0,f1,label\n0.5,1.0,0\n-0.5,2.0,1\n")
        ds = load_dataset_csv(path)
        np.testing.assert_array_equal(ds.y, [-1.0, 1.0])

    def test_missing_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f0,f1,label\n0.5,1.0\n")
        with pytest.raises(ParseError) as exc:
            load_dataset_csv(path)
        assert exc.value.line == 2

    def test_non_binary_labels(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("f0,label\n0.5,3\n1.0,1\n")
        with pytest.raises(InvalidInput):
            load_dataset_csv(path)

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((9, 4))
        y = rng.choice([-1.0, 1.0], 9)
        path = tmp_path / "d.csv"
        save_dataset_csv(path, x, y)
        ds = load_dataset_csv(path)
        np.testing.assert_array_equal(ds.X, x)
        np.testing.assert_array_equal(ds.y, y)

    def test_dataset_validates_labels(self):
        with pytest.raises(InvalidInput):
            Dataset(X=np.zeros((2, 1)), y=np.array([1.0, np.inf]))

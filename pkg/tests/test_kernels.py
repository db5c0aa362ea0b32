import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from pairtest.kernels import (
    DistanceInduced,
    EuclideanPower,
    FromKernel,
    Gaussian,
    Product,
    center_gram,
    gram,
    kernel_eval,
    median_heuristic_sigma,
    negative_type_form,
    semimetric_eval,
    semimetric_matrix,
)

QS = [0.5, 1.0, 1.5, 2.0]

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)


def sample_arrays(max_rows=12, max_cols=3):
    return st.integers(1, max_cols).flatmap(
        lambda d: arrays(np.float64, st.tuples(st.integers(2, max_rows), st.just(d)), elements=finite)
    )


class TestSemimetric:
    def test_euclidean_345(self):
        assert semimetric_eval(EuclideanPower(1), [0, 0], [3, 4]) == 5.0

    @pytest.mark.parametrize(
        "rho",
        [EuclideanPower(0.5), EuclideanPower(2), FromKernel(Gaussian(0.7)), FromKernel(DistanceInduced())],
    )
    def test_identity_is_zero(self, rho):
        assert semimetric_eval(rho, [1.5, -2.0], [1.5, -2.0]) == 0.0

    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 4.0])
    def test_gaussian_generated_semimetric(self, t):
        z, z2 = np.zeros(2), np.array([math.sqrt(t), 0.0])
        got = semimetric_eval(FromKernel(Gaussian(1.0)), z, z2)
        assert got == pytest.approx(2 * (1 - math.exp(-t)), abs=1e-15)

    @pytest.mark.parametrize("q", [0.0, -1.0, 2.0001, float("nan")])
    def test_exponent_range(self, q):
        with pytest.raises(ValueError):
            EuclideanPower(q)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            semimetric_eval(EuclideanPower(1), [0, 0], [1, 2, 3])

    @pytest.mark.parametrize("q", QS)
    def test_matches_oracle(self, q):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=(6, 3)), rng.normal(size=(4, 3))
        R = semimetric_matrix(EuclideanPower(q), a, b)
        for i in range(6):
            for j in range(4):
                assert R[i, j] == pytest.approx(oracles.rho_q(a[i], b[j], q), rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(sample_arrays(), st.sampled_from(QS))
    def test_symmetric_nonnegative(self, pts, q):
        R = semimetric_matrix(EuclideanPower(q), pts)
        assert np.all(R >= 0)
        assert np.array_equal(R, R.T)
        assert np.all(np.diag(R) == 0)


class TestNegativeType:
    def test_two_points(self):
        assert negative_type_form(EuclideanPower(1), [[0.0], [3.0]], [1, -1]) == -6.0

    def test_identical_points(self):
        pts = np.ones((5, 2))
        assert negative_type_form(EuclideanPower(1.3), pts, [1, -2, 0.5, 0.25, 0.25]) == 0.0

    def test_weights_must_cancel(self):
        with pytest.raises(ValueError, match="sum to zero"):
            negative_type_form(EuclideanPower(1), [[0.0], [1.0]], [1, 1])

    def test_random_normal_points(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((10, 3))
        w = rng.standard_normal(10)
        w -= w.mean()
        value = negative_type_form(EuclideanPower(1.5), pts, w)
        # brute-force double sum
        brute = sum(w[i] * w[j] * oracles.rho_q(pts[i], pts[j], 1.5) for i in range(10) for j in range(10))
        assert value == pytest.approx(brute, rel=1e-10, abs=1e-12)
        assert value <= 1e-10

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from(QS), st.integers(0, 10_000))
    def test_nonpositive_for_valid_exponents(self, q, seed):
        rng = np.random.default_rng(seed)
        pts = rng.standard_normal((50, rng.integers(1, 5)))
        w = rng.standard_normal(50)
        w -= w.mean()
        assert negative_type_form(EuclideanPower(q), pts, w) <= 1e-8

    def test_exponent_above_two_is_not_negative_type(self):
        # sanity check that the form is informative: ||.||^3 violates it
        pts = np.array([[0.0], [1.0], [2.0]])
        w = np.array([1.0, -2.0, 1.0])
        R = np.abs(pts - pts.T) ** 3
        assert w @ R @ w > 0


class TestKernelEval:
    def test_distance_kernel_hand_value(self):
        assert kernel_eval(DistanceInduced(EuclideanPower(1)), [3.0], [5.0]) == 3.0

    @pytest.mark.parametrize("q", QS)
    def test_vanishes_at_center(self, q):
        z0 = (0.3, -1.2)
        assert kernel_eval(DistanceInduced(EuclideanPower(q), center=z0), z0, z0) == 0.0

    def test_gaussian_unit_diagonal(self):
        assert kernel_eval(Gaussian(1.0), [1.0, 2.0], [1.0, 2.0]) == 1.0

    def test_invalid_sigma(self):
        with pytest.raises(ValueError):
            Gaussian(0.0)
        with pytest.raises(ValueError):
            Gaussian(-1.0)

    def test_center_dimension_checked(self):
        with pytest.raises(ValueError, match="dimension"):
            kernel_eval(DistanceInduced(center=(0.0, 0.0)), [1.0], [2.0])

    def test_product_kernel_splits_columns(self):
        k = Product(DistanceInduced(scale=1.0), Gaussian(0.5), split=1)
        z, z2 = np.array([1.0, 0.0, 2.0]), np.array([3.0, 1.0, 0.0])
        expected = oracles.dist_kernel([1.0], [3.0], 1.0, [0.0], scale=1.0) * oracles.gauss_kernel(
            [0.0, 2.0], [1.0, 0.0], 0.5
        )
        assert kernel_eval(k, z, z2) == pytest.approx(expected, rel=1e-14)

    def test_matches_oracle(self):
        rng = np.random.default_rng(1)
        z0 = rng.normal(size=2)
        k = DistanceInduced(EuclideanPower(0.7), center=z0)
        for _ in range(10):
            u, v = rng.normal(size=2), rng.normal(size=2)
            assert kernel_eval(k, u, v) == pytest.approx(oracles.dist_kernel(u, v, 0.7, z0), rel=1e-12, abs=1e-14)


class TestMedianHeuristic:
    def test_two_points(self):
        assert median_heuristic_sigma([[0.0, 0.0], [2.0, 0.0]]) == 0.25

    def test_three_points(self):
        assert median_heuristic_sigma([0.0, 1.0, 2.0]) == 1.0

    def test_zero_distances_excluded(self):
        # pairwise distances {0, 3, 3}; the zero is dropped
        assert median_heuristic_sigma([0.0, 0.0, 3.0]) == pytest.approx(1 / 9)

    def test_scaling(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(30, 2))
        assert median_heuristic_sigma(4.0 * x) == pytest.approx(median_heuristic_sigma(x) / 16.0, rel=1e-12)

    def test_degenerate(self):
        with pytest.raises(ValueError, match="identical"):
            median_heuristic_sigma(np.ones((4, 2)))
        with pytest.raises(ValueError):
            median_heuristic_sigma([[1.0]])


class TestGram:
    def test_single_point_at_center(self):
        G = gram(DistanceInduced(EuclideanPower(1.2), center=(2.0,)), [[2.0]])
        assert G.shape == (1, 1) and G[0, 0] == 0.0

    def test_gaussian_unit_diagonal(self):
        x = np.random.default_rng(0).normal(size=(7, 3))
        assert np.all(np.diag(gram(Gaussian(0.3), x)) == 1.0)

    def test_hand_matrix(self):
        G = gram(DistanceInduced(EuclideanPower(1)), [0.0, 3.0, 5.0])
        np.testing.assert_array_equal(G, [[0, 0, 0], [0, 3, 3], [0, 3, 5]])

    def test_rectangular(self):
        a, b = np.arange(3.0), np.arange(4.0) + 0.5
        G = gram(Gaussian(1.0), a, b)
        assert G.shape == (3, 4)
        assert G[2, 1] == pytest.approx(math.exp(-0.25))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            gram(Gaussian(1.0), np.zeros((3, 2)), np.zeros((3, 3)))

    def test_read_only(self):
        G = gram(Gaussian(1.0), np.zeros((3, 1)))
        with pytest.raises(ValueError):
            G[0, 0] = 2.0

    @settings(max_examples=40, deadline=None)
    @given(sample_arrays(), st.sampled_from(QS))
    def test_symmetry_tolerance(self, pts, q):
        for k in (DistanceInduced(EuclideanPower(q)), Gaussian(0.1), DistanceInduced(FromKernel(Gaussian(0.2)))):
            G = gram(k, pts)
            assert np.all(np.abs(G - G.T) <= 1e-12 * np.maximum(1, np.abs(G)))

    @pytest.mark.parametrize("q", QS)
    @pytest.mark.parametrize("m", [5, 60, 200])
    def test_distance_gram_psd(self, q, m):
        rng = np.random.default_rng(m)
        x = rng.normal(size=(m, 3)) * 2
        ev = np.linalg.eigvalsh(gram(DistanceInduced(EuclideanPower(q), center=tuple(rng.normal(size=3))), x))
        assert ev.min() >= -1e-8 * ev.max()

    @pytest.mark.parametrize("q", QS)
    def test_round_trip_through_induced_kernel(self, q):
        rng = np.random.default_rng(4)
        rho = EuclideanPower(q)
        back = FromKernel(DistanceInduced(rho, center=tuple(rng.normal(size=2))))
        for _ in range(20):
            u, v = rng.normal(size=2) * 3, rng.normal(size=2) * 3
            assert semimetric_eval(back, u, v) == pytest.approx(semimetric_eval(rho, u, v), abs=1e-10)

    def test_product_is_hadamard(self):
        rng = np.random.default_rng(5)
        data = rng.normal(size=(25, 5))
        kx, ky = DistanceInduced(EuclideanPower(0.5), scale=1.0), Gaussian(0.4)
        G = gram(Product(kx, ky, split=2), data)
        np.testing.assert_allclose(G, gram(kx, data[:, :2]) * gram(ky, data[:, 2:]), rtol=0, atol=1e-12)

    def test_size_cap(self, monkeypatch):
        import pairtest.kernels as kernels

        monkeypatch.setattr(kernels, "MAX_GRAM_SIZE", 10)
        with pytest.raises(ValueError, match="exceeds"):
            gram(Gaussian(1.0), np.zeros((11, 1)))


class TestCenterGram:
    def test_constant_matrix(self):
        np.testing.assert_allclose(center_gram(3.7 * np.ones((4, 4))), 0, atol=1e-15)

    def test_idempotent(self):
        G = gram(Gaussian(1.0), np.random.default_rng(0).normal(size=(9, 2)))
        C = center_gram(G)
        np.testing.assert_allclose(center_gram(C), C, atol=1e-14)

    def test_two_by_two(self):
        np.testing.assert_allclose(center_gram([[0, 0], [0, 1]]), [[0.25, -0.25], [-0.25, 0.25]], atol=1e-16)

    def test_matches_explicit_hgh(self):
        G = gram(DistanceInduced(), np.random.default_rng(1).normal(size=(8, 2)))
        H = np.eye(8) - 1 / 8
        np.testing.assert_allclose(center_gram(G), H @ G @ H, atol=1e-12)

    def test_not_square(self):
        with pytest.raises(ValueError):
            center_gram(np.zeros((2, 3)))

    @settings(max_examples=40, deadline=None)
    @given(sample_arrays(max_rows=40), st.sampled_from(QS))
    def test_row_and_column_sums_vanish(self, pts, q):
        C = center_gram(gram(DistanceInduced(EuclideanPower(q)), pts))
        assert np.all(np.abs(C.sum(axis=0)) <= 1e-10)
        assert np.all(np.abs(C.sum(axis=1)) <= 1e-10)

import math

import numpy as np
import pytest

from mposterior import (
    GaussianKernel,
    MahalanobisKernel,
    eval_kernel,
    gram,
    hellinger_expfam,
    hellinger_gaussian,
    inner_product,
    kernel_from_config,
    kernel_to_config,
    make_empirical,
    median_bandwidth,
    mmd,
    mmd_squared,
    rho_k,
)
from mposterior._accel import available_backends, get_impl

from conftest import random_measure
from oracles import double_sum_mmd_squared, hellinger_quadrature

EXP_HALF = math.exp(-0.5)


class TestEvalKernel:
    def test_self_is_one(self):
        assert eval_kernel(GaussianKernel(1.0), [0.3, -1.0], [0.3, -1.0]) == 1.0

    def test_gaussian_value(self):
        assert eval_kernel(GaussianKernel(1.0), [0.0], [1.0]) == pytest.approx(EXP_HALF, abs=1e-15)

    def test_mahalanobis_value(self):
        spec = MahalanobisKernel(np.eye(1) / 8.0)
        assert eval_kernel(spec, [0.0], [2.0]) == pytest.approx(EXP_HALF, abs=1e-15)

    def test_symmetry_and_range(self, rng):
        spec = GaussianKernel(0.7)
        for _ in range(20):
            x, y = rng.standard_normal(3), rng.standard_normal(3)
            v = eval_kernel(spec, x, y)
            assert 0.0 < v <= 1.0
            assert v == eval_kernel(spec, y, x)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_kernel(GaussianKernel(1.0), [0.0], [0.0, 1.0])
        with pytest.raises(ValueError):
            eval_kernel(MahalanobisKernel(np.eye(2)), [0.0], [1.0])

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            GaussianKernel(0.0)
        with pytest.raises(ValueError):
            MahalanobisKernel(np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            MahalanobisKernel(-np.eye(2))


class TestRhoK:
    def test_zero_at_equal_points(self):
        assert rho_k(GaussianKernel(1.0), [1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_unit_distance_value(self):
        expected = math.sqrt(2.0 - 2.0 * EXP_HALF)
        assert rho_k(GaussianKernel(1.0), [0.0], [1.0]) == pytest.approx(expected, abs=1e-15)

    def test_equals_mmd_of_diracs(self, rng):
        spec = GaussianKernel(1.3)
        for _ in range(100):
            x, y = rng.standard_normal(2), rng.standard_normal(2)
            dx, dy = make_empirical([x]), make_empirical([y])
            assert rho_k(spec, x, y) == mmd(dx, dy, spec)


class TestInnerProduct:
    def test_dirac_self(self):
        d = make_empirical([[0.4]])
        assert inner_product(d, d, GaussianKernel(1.0)) == 1.0

    def test_dirac_pair_is_kernel_value(self, rng):
        spec = GaussianKernel(0.9)
        x, y = rng.standard_normal(2), rng.standard_normal(2)
        assert inner_product(make_empirical([x]), make_empirical([y]), spec) == pytest.approx(
            eval_kernel(spec, x, y), abs=1e-15)

    def test_hand_evaluated_double_sum(self):
        p = make_empirical([[0.0], [1.0]])
        q = make_empirical([[0.0]])
        expected = 0.5 * (1.0 + EXP_HALF)
        assert inner_product(p, q, GaussianKernel(1.0)) == pytest.approx(expected, abs=1e-14)

    def test_symmetric_bitwise(self, rng):
        spec = GaussianKernel(1.0)
        for _ in range(30):
            p, q = random_measure(rng), random_measure(rng)
            assert inner_product(p, q, spec) == inner_product(q, p, spec)

    def test_self_nonnegative(self, rng):
        spec = MahalanobisKernel(np.array([[0.5, 0.1], [0.1, 0.3]]))
        for _ in range(20):
            p = random_measure(rng)
            assert inner_product(p, p, spec) >= 0.0


class TestMMD:
    def test_identical_measures_exact_zero(self, rng):
        spec = GaussianKernel(1.0)
        p = random_measure(rng)
        assert mmd_squared(p, p, spec) == 0.0

    def test_dirac_pair(self, rng):
        spec = GaussianKernel(1.0)
        x, y = rng.standard_normal(1), rng.standard_normal(1)
        expected = 2.0 - 2.0 * eval_kernel(spec, x, y)
        got = mmd_squared(make_empirical([x]), make_empirical([y]), spec)
        assert got == pytest.approx(expected, abs=1e-15)

    def test_hand_evaluated_case(self):
        p = make_empirical([[0.0], [1.0]])
        q = make_empirical([[0.0]])
        expected = 0.25 * (2.0 + 2.0 * EXP_HALF) + 1.0 - 2.0 * (0.5 + 0.5 * EXP_HALF)
        assert mmd_squared(p, q, GaussianKernel(1.0)) == pytest.approx(expected, abs=1e-14)

    def test_matches_quadruple_loop_oracle(self, rng):
        spec = GaussianKernel(1.1)
        for _ in range(10):
            p, q = random_measure(rng, max_atoms=8), random_measure(rng, max_atoms=8)
            oracle = double_sum_mmd_squared(
                p.atoms, p.weights, q.atoms, q.weights,
                lambda a, b: eval_kernel(spec, a, b))
            assert mmd_squared(p, q, spec) == pytest.approx(max(oracle, 0.0), abs=1e-12)

    def test_decomposes_into_inner_products(self, rng):
        spec = GaussianKernel(0.8)
        for _ in range(20):
            p, q = random_measure(rng), random_measure(rng)
            manual = (inner_product(p, p, spec) + inner_product(q, q, spec)
                      - 2.0 * inner_product(p, q, spec))
            assert abs(mmd_squared(p, q, spec) - max(manual, 0.0)) <= 1e-12

    def test_metric_axioms(self, rng):
        spec = GaussianKernel(1.0)
        for _ in range(100):
            p, q, r = (random_measure(rng) for _ in range(3))
            dpq, dqp = mmd(p, q, spec), mmd(q, p, spec)
            assert dpq == dqp
            assert dpq >= 0.0
            assert dpq <= mmd(p, r, spec) + mmd(r, q, spec) + 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mmd_squared(make_empirical([[0.0]]), make_empirical([[0.0, 1.0]]),
                        GaussianKernel(1.0))


class TestGram:
    def test_positive_semidefinite_both_variants(self, rng):
        specs = [GaussianKernel(0.6),
                 MahalanobisKernel(np.array([[1.0, 0.2], [0.2, 0.5]]))]
        for spec in specs:
            for _ in range(10):
                pts = rng.standard_normal((int(rng.integers(2, 30)), 2))
                k = gram(spec, pts, pts)
                assert np.linalg.eigvalsh(k)[0] >= -1e-8

    def test_matches_eval_kernel(self, rng):
        spec = MahalanobisKernel(np.array([[0.7, -0.1], [-0.1, 0.9]]))
        xs = rng.standard_normal((4, 2))
        k = gram(spec, xs, xs)
        for i in range(4):
            for j in range(4):
                assert k[i, j] == pytest.approx(eval_kernel(spec, xs[i], xs[j]), abs=1e-14)


class TestMedianBandwidth:
    def test_single_pair(self):
        assert median_bandwidth([[0.0], [1.0]]) == 1.0

    def test_three_points(self):
        # pairwise distances {1, 1, 2} -> median 1
        assert median_bandwidth([[0.0], [1.0], [2.0]]) == 1.0

    def test_all_coincident_raises(self):
        with pytest.raises(ValueError):
            median_bandwidth([[0.0], [0.0], [0.0]])

    def test_single_point_raises(self):
        with pytest.raises(ValueError):
            median_bandwidth([[0.0]])

    def test_large_input_deterministic_stride(self, rng):
        pts = rng.standard_normal((2500, 2))
        assert median_bandwidth(pts) == median_bandwidth(pts)
        # strided subsample of <= 1000 points: matches manual thinning
        manual = median_bandwidth(pts[::3])
        assert median_bandwidth(pts) == manual


class TestHellinger:
    def test_identical_is_zero(self):
        assert hellinger_gaussian([0.0], [[1.0]], [0.0], [[1.0]]) == 0.0

    def test_unit_variance_shift_two(self):
        expected = math.sqrt(1.0 - EXP_HALF)
        got = hellinger_gaussian([0.0], [[1.0]], [2.0], [[1.0]])
        assert got == pytest.approx(expected, abs=1e-14)

    def test_against_quadrature(self, rng):
        for _ in range(10):
            mu1, mu2 = rng.standard_normal(2) * 2
            v1, v2 = rng.uniform(0.3, 3.0, size=2)
            got = hellinger_gaussian([mu1], [[v1]], [mu2], [[v2]])
            assert got == pytest.approx(hellinger_quadrature(mu1, v1, mu2, v2), abs=1e-9)

    def test_symmetric(self, rng):
        mu1, mu2 = rng.standard_normal((2, 2))
        a = rng.standard_normal((2, 2))
        sigma = a @ a.T + np.eye(2)
        assert hellinger_gaussian(mu1, sigma, mu2, sigma) == pytest.approx(
            hellinger_gaussian(mu2, sigma, mu1, sigma), abs=1e-15)

    def test_kernel_metric_identity_equal_covariances(self, rng):
        # Equal-covariance Gaussians: h = rho_k / sqrt(2) under the matched
        # kernel A = inv(Sigma)/8, exactly.
        for _ in range(100):
            p = int(rng.integers(1, 4))
            mu1, mu2 = rng.standard_normal((2, p)) * 1.5
            a = rng.standard_normal((p, p))
            sigma = a @ a.T + 0.5 * np.eye(p)
            spec = MahalanobisKernel.from_covariance(sigma)
            h = hellinger_gaussian(mu1, sigma, mu2, sigma)
            assert abs(h - rho_k(spec, mu1, mu2) / math.sqrt(2.0)) < 1e-10

    def test_non_spd_covariance_raises(self):
        with pytest.raises(ValueError):
            hellinger_gaussian([0.0], [[-1.0]], [0.0], [[1.0]])

    def test_expfam_identical_thetas(self):
        assert hellinger_expfam(lambda t: float(t @ t) / 2.0, [1.0], [1.0]) == 0.0

    def test_expfam_gaussian_natural_form(self):
        g = lambda t: float(t @ t) / 2.0
        got = hellinger_expfam(g, [0.0], [2.0])
        assert got == pytest.approx(math.sqrt(1.0 - EXP_HALF), abs=1e-14)
        assert got == pytest.approx(hellinger_gaussian([0.0], [[1.0]], [2.0], [[1.0]]), abs=1e-14)

    def test_expfam_linear_logpartition_is_zero(self, rng):
        g = lambda t: 3.0 * float(t.sum()) + 1.0
        t1, t2 = rng.standard_normal((2, 3))
        assert hellinger_expfam(g, t1, t2) == 0.0

    def test_expfam_nonfinite_raises(self):
        with pytest.raises(ValueError):
            hellinger_expfam(lambda t: float("inf"), [0.0], [1.0])


class TestKernelConfig:
    def test_gaussian_roundtrip(self):
        spec = GaussianKernel(2.5)
        cfg = kernel_to_config(spec)
        assert cfg == {"type": "gaussian", "h": 2.5}
        assert kernel_from_config(cfg) == spec

    def test_mahalanobis_roundtrip(self):
        spec = MahalanobisKernel(np.array([[0.5, 0.1], [0.1, 0.25]]))
        cfg = kernel_to_config(spec)
        assert cfg["type"] == "mahalanobis"
        back = kernel_from_config(cfg)
        np.testing.assert_allclose(back.scale, spec.scale)

    def test_unknown_type(self):
        with pytest.raises(ValueError):
            kernel_from_config({"type": "laplace", "h": 1.0})


class TestBackends:
    @pytest.mark.skipif(len(available_backends()) < 2, reason="compiled backend not built")
    def test_backends_agree(self, rng):
        compiled = get_impl("compiled")
        python = get_impl("python")
        for _ in range(50):
            n, m, p = rng.integers(1, 60), rng.integers(1, 60), rng.integers(1, 8)
            u, v = rng.standard_normal((n, p)), rng.standard_normal((m, p))
            b, g = rng.random(n), rng.random(m)
            a_val = compiled(u, b, v, g)
            b_val = python(u, b, v, g)
            assert a_val == pytest.approx(b_val, rel=1e-12, abs=1e-13)

import numpy as np
import pytest

from plumeplace.cca import (
    first_canonical,
    gaussian_mi_from_correlations,
    mi_lower_bound,
)
from plumeplace.mi import KnnConfig, ksg_mi

from oracles import sweep_first_correlation


class TestFirstCanonical:
    def test_identical_blocks_give_rho_one(self):
        q = np.random.default_rng(0).standard_normal((500, 2))
        pair = first_canonical(q, q.copy(), ridge=0.0)
        assert pair.rho1 == pytest.approx(1.0, abs=1e-8)

    def test_independent_blocks_small_rho(self):
        rng = np.random.default_rng(1)
        pair = first_canonical(rng.standard_normal((5000, 2)), rng.standard_normal((5000, 3)))
        assert pair.rho1 < 0.1

    def test_matches_direction_sweep_oracle(self):
        rng = np.random.default_rng(2)
        q = rng.standard_normal(2000)
        d = np.column_stack([q + 0.5 * rng.standard_normal(2000), rng.standard_normal(2000)])
        pair = first_canonical(q, d)
        assert pair.rho1 == pytest.approx(sweep_first_correlation(q, d), abs=1e-3)

    def test_projection_correlation_equals_rho1(self):
        rng = np.random.default_rng(3)
        q = rng.standard_normal((1500, 2))
        d = q @ rng.standard_normal((2, 3)) + 0.8 * rng.standard_normal((1500, 3))
        pair = first_canonical(q, d)
        corr = np.corrcoef(q @ pair.alpha, d @ pair.beta)[0, 1]
        assert corr == pytest.approx(pair.rho1, abs=1e-8)

    def test_alpha_unit_under_q_covariance(self):
        rng = np.random.default_rng(4)
        q = rng.standard_normal((1000, 2)) * np.array([100.0, 0.01])
        d = q @ rng.standard_normal((2, 2)) + rng.standard_normal((1000, 2))
        pair = first_canonical(q, d)
        cov_q = np.cov(q.T, ddof=1)
        assert pair.alpha @ cov_q @ pair.alpha == pytest.approx(1.0, rel=1e-6)

    def test_affine_invariance_of_rho1(self):
        rng = np.random.default_rng(5)
        q = rng.standard_normal(1000)
        d = np.column_stack([q + rng.standard_normal(1000), q - 0.3 * rng.standard_normal(1000)])
        m = np.array([[1.3, -0.7], [0.4, 2.2]])
        r_raw = first_canonical(q, d, ridge=0.0).rho1
        r_map = first_canonical(q, d @ m + np.array([5.0, -2.0]), ridge=0.0).rho1
        assert r_map == pytest.approx(r_raw, abs=1e-6)

    def test_rho1_monotone_in_snr(self):
        rng = np.random.default_rng(6)
        q = rng.standard_normal(2000)
        noise = rng.standard_normal(2000)
        rhos = [first_canonical(q, a * q + noise).rho1 for a in (0.2, 0.5, 1.0, 2.0)]
        assert all(b > a for a, b in zip(rhos, rhos[1:]))

    def test_rejects_constant_coordinate_with_zero_ridge(self):
        rng = np.random.default_rng(7)
        q = rng.standard_normal(300)
        d = np.column_stack([rng.standard_normal(300), np.ones(300)])
        with pytest.raises(ValueError):
            first_canonical(q, d, ridge=0.0)

    def test_rejects_too_few_samples(self):
        with pytest.raises(ValueError):
            first_canonical(np.eye(3), np.eye(3))


class TestGaussianMi:
    def test_zero_correlation(self):
        assert gaussian_mi_from_correlations([0.0]) == 0.0

    def test_single_09(self):
        assert gaussian_mi_from_correlations([0.9]) == pytest.approx(0.8303656034108255, abs=1e-12)

    def test_additive(self):
        assert gaussian_mi_from_correlations([0.5, 0.5]) == pytest.approx(
            2 * 0.14384103622589045, abs=1e-12
        )

    def test_rejects_rho_one(self):
        with pytest.raises(ValueError):
            gaussian_mi_from_correlations([1.0])

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            gaussian_mi_from_correlations([-0.2])


class TestMiLowerBound:
    def test_1d_gaussian_matches_full_ksg(self):
        rng = np.random.default_rng(8)
        z = rng.multivariate_normal([0, 0], [[1, 0.7], [0.7, 1]], size=2000)
        lb = mi_lower_bound(z[:, 0], z[:, 1])
        full = ksg_mi(z[:, 0], z[:, 1])
        assert lb == pytest.approx(full, abs=0.08)
        assert lb == pytest.approx(-0.5 * np.log(0.51), abs=0.08)

    def test_independent_near_zero(self):
        rng = np.random.default_rng(9)
        est = mi_lower_bound(rng.standard_normal(2000), rng.standard_normal((2000, 3)))
        assert abs(est) < 0.05

    def test_statistical_dpi_on_3d_channel(self):
        lbs, fulls = [], []
        for seed in range(8):
            rng = np.random.default_rng(seed)
            q = rng.standard_normal(2000)
            noise = rng.standard_normal((2000, 3)) @ np.diag([0.7, 1.0, 1.3])
            d = np.column_stack([q, 0.8 * q, -0.5 * q]) + noise
            lbs.append(mi_lower_bound(q, d))
            fulls.append(ksg_mi(q, d))
        assert np.mean(lbs) <= np.mean(fulls) + 2 * np.std(fulls)

    def test_noise_columns_do_not_help(self):
        rng = np.random.default_rng(10)
        q = rng.standard_normal(1500)
        d = np.column_stack([q + 0.5 * rng.standard_normal(1500)])
        base = mi_lower_bound(q, d)
        padded = mi_lower_bound(q, np.column_stack([d, rng.standard_normal((1500, 3))]))
        assert padded <= base + 0.1

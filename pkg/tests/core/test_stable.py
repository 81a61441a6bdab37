"""
Tests for the alpha-stable samplers
"""
import math

import numpy as np
import pytest
from scipy import stats

from levy_extract.core.errors import ParameterError
from levy_extract.core.stable import (
    hill_tail_index,
    levy_increment,
    sample_isotropic_stable,
    sample_positive_stable,
    sample_standard_symmetric_stable,
)
from levy_extract.models.sde import StableParams


class TestSymmetricStable:
    """Test cases for the Chambers-Mallows-Stuck sampler"""

    def test_gaussian_limit(self, rng):
        """Test that alpha=2 gives N(0, 2)"""
        draws = sample_standard_symmetric_stable(2.0, 100_000, rng)

        assert stats.kstest(draws, "norm", args=(0.0, math.sqrt(2.0))).pvalue > 0.01
        assert np.var(draws) == pytest.approx(2.0, rel=0.03)

    def test_cauchy_case(self, rng):
        """Test that alpha=1 gives the standard Cauchy law"""
        draws = sample_standard_symmetric_stable(1.0, 100_000, rng)
        assert stats.kstest(draws, "cauchy").pvalue > 0.01

    @pytest.mark.parametrize("alpha", [0.7, 1.3, 1.5, 1.8])
    def test_characteristic_function(self, rng, alpha):
        """Test the empirical characteristic function against exp(-|u|^alpha)"""
        draws = sample_standard_symmetric_stable(alpha, 1_000_000, rng)
        for u in (0.5, 1.0, 2.0):
            assert np.mean(np.cos(u * draws)) == pytest.approx(math.exp(-abs(u) ** alpha), abs=0.01)

    def test_hill_tail_index(self, rng):
        """Test that the tail index of |X| is close to alpha"""
        draws = sample_standard_symmetric_stable(1.5, 1_000_000, rng)
        assert 1.4 <= hill_tail_index(draws, tail_fraction=0.01) <= 1.6

    @pytest.mark.parametrize("alpha", [0.0, 2.1])
    def test_invalid_alpha_raises_error(self, rng, alpha):
        with pytest.raises(ParameterError, match="alpha must lie in"):
            sample_standard_symmetric_stable(alpha, 10, rng)

    def test_invalid_count_raises_error(self, rng):
        with pytest.raises(ParameterError, match="count must be a positive integer"):
            sample_standard_symmetric_stable(1.5, 0, rng)


class TestIsotropicStable:
    """Test cases for Gaussian subordination in R^n"""

    def test_positive_stable_laplace_transform(self, rng):
        """Test E exp(-sA) = exp(-s^beta)"""
        draws = sample_positive_stable(0.75, 500_000, rng)

        assert np.all(draws > 0)
        for s in (0.5, 1.0, 2.0):
            assert np.mean(np.exp(-s * draws)) == pytest.approx(math.exp(-s ** 0.75), abs=0.005)

    def test_one_dimension_matches_symmetric_law(self, rng):
        """Test that the 1D isotropic law equals the symmetric stable law"""
        iso = sample_isotropic_stable(StableParams(alpha=1.5, dim=1), 100_000, rng)
        cms = sample_standard_symmetric_stable(1.5, 100_000, rng)

        assert iso.shape == (100_000, 1)
        assert stats.ks_2samp(iso[:, 0], cms).pvalue > 0.01

    def test_angle_is_uniform(self, rng):
        """Test rotational symmetry in 2D"""
        draws = sample_isotropic_stable(StableParams(alpha=1.5, dim=2), 100_000, rng)
        angles = np.arctan2(draws[:, 1], draws[:, 0])

        assert stats.kstest(angles, "uniform", args=(-math.pi, 2 * math.pi)).pvalue > 0.01

    def test_rotated_coordinates_have_the_same_law(self, rng):
        draws = sample_isotropic_stable(StableParams(alpha=1.5, dim=2), 100_000, rng)
        other = sample_isotropic_stable(StableParams(alpha=1.5, dim=2), 100_000, rng)
        theta = 0.7
        rotation = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        rotated = draws @ rotation.T

        for k in range(2):
            assert stats.ks_2samp(rotated[:, k], other[:, k]).pvalue > 0.01

    def test_radial_tail_index(self, rng):
        draws = sample_isotropic_stable(StableParams(alpha=1.5, dim=2), 1_000_000, rng)
        radius = np.linalg.norm(draws, axis=1)

        assert 1.35 <= hill_tail_index(radius, tail_fraction=0.01) <= 1.65

    def test_characteristic_function_2d(self, rng):
        draws = sample_isotropic_stable(StableParams(alpha=1.2, dim=2), 1_000_000, rng)
        u = np.array([0.6, 0.8])
        assert np.mean(np.cos(draws @ u)) == pytest.approx(math.exp(-1.0), abs=0.01)


class TestLevyIncrement:
    """Test cases for the per-step Levy increment"""

    def test_increment_scaling(self, rng):
        """Test that doubling dt scales increments by 2^(1/alpha)"""
        params = StableParams(alpha=1.5, sigma=1.0)
        small = np.abs(levy_increment(params, 0.001, 200_000, rng)[:, 0])
        large = np.abs(levy_increment(params, 0.002, 200_000, rng)[:, 0])

        for q in (0.5, 0.75, 0.9):
            ratio = np.quantile(large, q) / np.quantile(small, q)
            assert ratio == pytest.approx(2.0 ** (1.0 / 1.5), rel=0.03)

    def test_sigma_scales_linearly(self):
        params = StableParams(alpha=1.5, sigma=1.0)
        doubled = StableParams(alpha=1.5, sigma=2.0)
        a = levy_increment(params, 0.01, 100, np.random.default_rng(3))
        b = levy_increment(doubled, 0.01, 100, np.random.default_rng(3))

        np.testing.assert_allclose(b, 2.0 * a, rtol=1e-14)

    def test_non_positive_dt_raises_error(self, rng):
        with pytest.raises(ParameterError, match="dt must be positive"):
            levy_increment(StableParams(alpha=1.5), 0.0, 10, rng)


class TestHillEstimator:
    """Test cases for the Hill tail-index estimator"""

    def test_pareto_tail(self, rng):
        """Test recovery of an exact Pareto index"""
        values = rng.pareto(1.2, 500_000) + 1.0
        assert hill_tail_index(values, tail_fraction=0.05) == pytest.approx(1.2, abs=0.05)

    def test_too_few_order_statistics(self):
        with pytest.raises(ParameterError, match="fewer than 2"):
            hill_tail_index(np.arange(10.0), tail_fraction=0.01)

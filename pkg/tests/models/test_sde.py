"""
Tests for SDE and burst dataset models
"""
import numpy as np
import pytest

from levy_extract.core.errors import ParameterError
from levy_extract.models.sde import Burst, BurstDataset, SdeSpec, StableParams


class TestStableParams:
    """Test cases for StableParams model"""

    def test_create_with_valid_values(self):
        """Test creating StableParams with valid values"""
        params = StableParams(alpha=1.5, sigma=0.8, dim=2)

        assert params.alpha == 1.5
        assert params.sigma == 0.8
        assert params.dim == 2

    @pytest.mark.parametrize("alpha", [0.0, -0.5, 2.5])
    def test_alpha_out_of_range_raises_error(self, alpha):
        """Test that alpha outside (0, 2] raises ValueError"""
        with pytest.raises(ValueError, match="alpha must lie in"):
            StableParams(alpha=alpha)

    def test_alpha_two_is_allowed(self):
        """Test that the Gaussian endpoint alpha=2 is accepted"""
        assert StableParams(alpha=2.0).alpha == 2.0

    def test_non_positive_sigma_raises_error(self):
        """Test that sigma <= 0 raises ParameterError"""
        with pytest.raises(ParameterError, match="sigma must be positive"):
            StableParams(alpha=1.5, sigma=0.0)

    def test_fractional_dim_raises_error(self):
        """Test that a non-integer dimension is rejected"""
        with pytest.raises(ParameterError, match="dim must be a positive integer"):
            StableParams(alpha=1.5, dim=1.5)


class TestSdeSpec:
    """Test cases for SdeSpec model"""

    @pytest.fixture
    def cubic_spec(self):
        return SdeSpec(drift=["3*x1 - x1^3"], diffusion_matrix=[["0"]],
                       stable=StableParams(alpha=1.5), t_star=0.01)

    def test_default_dt_is_thousandth_of_t_star(self, cubic_spec):
        """Test that dt defaults to 1e-3 * t_star"""
        assert cubic_spec.dt == pytest.approx(1e-5)
        assert cubic_spec.n_steps == 1000

    def test_dim_follows_drift(self, cubic_spec):
        assert cubic_spec.dim == 1

    def test_dt_larger_than_t_star_raises_error(self):
        """Test that dt > t_star is rejected"""
        with pytest.raises(ParameterError, match="dt must lie in"):
            SdeSpec(drift=["0"], diffusion_matrix=[["1"]], stable=None, t_star=0.01, dt=0.02)

    def test_non_integer_step_count_raises_error(self):
        """Test that t_star/dt must be an integer"""
        with pytest.raises(ParameterError, match="must be an integer"):
            SdeSpec(drift=["0"], diffusion_matrix=[["1"]], stable=None, t_star=0.01, dt=0.003)

    def test_diffusion_shape_mismatch_raises_error(self):
        """Test that a non-square diffusion matrix is rejected"""
        with pytest.raises(ParameterError, match="diffusion_matrix must be 2x2"):
            SdeSpec(drift=["-x1", "-x2"], diffusion_matrix=[["1", "0"]], stable=None, t_star=0.01)

    def test_stable_dim_mismatch_raises_error(self):
        """Test that the Levy dimension has to match the drift"""
        with pytest.raises(ParameterError, match="does not match drift dimension"):
            SdeSpec(drift=["-x1", "-x2"], diffusion_matrix=[["0", "0"], ["0", "0"]],
                    stable=StableParams(alpha=1.5, dim=1), t_star=0.01)

    def test_to_dict_and_from_dict(self, cubic_spec):
        """Test converting SdeSpec to a dictionary and back"""
        payload = cubic_spec.to_dict()

        assert payload["stable"] == {"alpha": 1.5, "sigma": 1.0, "dim": 1}
        restored = SdeSpec.from_dict(payload)
        assert restored == cubic_spec
        assert restored.digest == cubic_spec.digest

    def test_digest_changes_with_fields(self, cubic_spec):
        """Test that any field change alters the provenance digest"""
        other = SdeSpec.from_dict({**cubic_spec.to_dict(), "t_star": 0.02})
        assert other.digest != cubic_spec.digest


class TestBurstDataset:
    """Test cases for Burst and BurstDataset models"""

    def test_one_dimensional_samples_become_columns(self):
        burst = Burst(z=0.5, samples=[0.4, 0.6, 0.5])

        assert burst.samples.shape == (3, 1)
        assert burst.n_samples == 3

    def test_non_finite_samples_raise_error(self):
        """Test that NaN endpoints are rejected"""
        with pytest.raises(ParameterError, match="finite"):
            Burst(z=[0.0], samples=[[0.1], [np.nan]])

    def test_sample_dimension_mismatch_raises_error(self):
        with pytest.raises(ParameterError, match="does not match z dimension"):
            Burst(z=[0.0, 1.0], samples=np.zeros((4, 1)))

    def test_differing_sample_counts_raise_error(self):
        """Test that every burst must hold the same number of samples"""
        bursts = [Burst(z=[0.0], samples=np.zeros((3, 1))), Burst(z=[1.0], samples=np.zeros((4, 1)))]
        with pytest.raises(ParameterError, match="differing sample counts"):
            BurstDataset(bursts=bursts, t_star=0.01, seed=0, spec_hash="x")

    def test_equality_is_bit_level(self):
        """Test that datasets compare equal only when every sample matches"""
        samples = np.linspace(-1.0, 1.0, 5)[:, None]
        a = BurstDataset(bursts=[Burst(z=[0.0], samples=samples)], t_star=0.01, seed=1, spec_hash="h")
        b = BurstDataset(bursts=[Burst(z=[0.0], samples=samples.copy())], t_star=0.01, seed=1, spec_hash="h")
        c = BurstDataset(bursts=[Burst(z=[0.0], samples=samples + 1e-16)], t_star=0.01, seed=1, spec_hash="h")

        assert a == b
        assert a != c

    def test_metadata_contents(self):
        dataset = BurstDataset(bursts=[Burst(z=[0.0, 1.0], samples=np.zeros((2, 2)))], t_star=0.05,
                               seed=3, spec_hash="abc")
        meta = dataset.metadata()

        assert meta["grid"] == [[0.0, 1.0]]
        assert meta["dim"] == 2
        assert meta["n_samples"] == 2
        assert meta["spec"] is None

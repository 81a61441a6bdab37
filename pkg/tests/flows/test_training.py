"""
Tests for maximum-likelihood flow training
"""
import math
from unittest.mock import patch

import numpy as np
import pytest
import torch
from scipy import integrate

from levy_extract.core.errors import ParameterError, TrainingError
from levy_extract.flows.model import FlowModel, flow_log_density, torch_threads
from levy_extract.flows.training import split_holdout, standardization, train_flow
from levy_extract.models.flow import FlowArchitecture, TrainConfig


@pytest.fixture
def architecture():
    return FlowArchitecture(arch="nsf1d", n_layers=2, hidden_layers=1, hidden_units=8)


@pytest.fixture
def quick_config():
    return TrainConfig(epochs=5, batch_size=256, learning_rate=1e-3, seed=3)


class TestHoldout:
    """Test cases for split_holdout and standardization"""

    def test_split_is_a_partition(self, rng):
        train, val = split_holdout(100, 0.1, rng)

        assert len(train) == 90
        assert len(val) == 10
        assert sorted(np.concatenate([train, val]).tolist()) == list(range(100))

    def test_validation_gets_at_least_one_point(self, rng):
        train, val = split_holdout(10, 0.001, rng)
        assert len(val) == 1
        assert len(train) == 9

    def test_standardization(self):
        shift, scale = standardization(np.array([[1.0, 0.0], [3.0, 4.0]]))

        np.testing.assert_allclose(shift, [2.0, 2.0])
        np.testing.assert_allclose(scale, [1.0, 2.0])

    def test_zero_spread_raises_error(self):
        with pytest.raises(ParameterError, match="zero spread"):
            standardization(np.ones((5, 1)))


class TestTrainFlow:
    """Test cases for train_flow"""

    def test_gaussian_samples(self, architecture, quick_config, rng):
        """Test that a short run fits N(1, 0.25) with the right peak and entropy"""
        samples = rng.normal(1.0, 0.5, size=(4000, 1))
        with torch_threads(1):
            model = train_flow(samples, architecture, quick_config)

        peak = -0.5 * math.log(2 * math.pi * 0.25)
        entropy = 0.5 * math.log(2 * math.pi * math.e * 0.25)
        assert flow_log_density(model, 1.0) == pytest.approx(peak, abs=0.1)
        assert -np.mean(flow_log_density(model, samples)) == pytest.approx(entropy, abs=0.05)

    def test_history_and_config_are_recorded(self, architecture, quick_config, rng):
        model = train_flow(rng.normal(size=500), architecture, quick_config)

        assert [row["epoch"] for row in model.training_history] == list(range(5))
        assert all(math.isfinite(row["val_nll"]) for row in model.training_history)
        assert model.train_config == quick_config
        assert not model.training

    def test_same_seed_is_bit_identical(self, architecture, quick_config, rng):
        samples = rng.normal(size=(600, 1))
        with torch_threads(1):
            a = train_flow(samples, architecture, quick_config).parameter_vector()
            b = train_flow(samples, architecture, quick_config).parameter_vector()
            c = train_flow(samples, architecture, TrainConfig(epochs=5, batch_size=256, seed=4)).parameter_vector()

        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_2d_training(self, rng):
        architecture = FlowArchitecture(arch="realnvp2d", n_layers=2, hidden_layers=1, hidden_units=4)
        samples = rng.normal(size=(800, 2)) * [1.0, 0.2]
        model = train_flow(samples, architecture, TrainConfig(epochs=3, batch_size=200))

        assert model.dim == 2
        assert np.all(np.isfinite(flow_log_density(model, samples[:10])))

    def test_outliers_are_clipped(self, architecture, rng):
        """Test that a huge outlier does not break training"""
        samples = np.append(rng.normal(size=999), 1e8)
        model = train_flow(samples, architecture, TrainConfig(epochs=2, batch_size=128))
        assert all(math.isfinite(row["train_nll"]) for row in model.training_history)

    def test_non_finite_loss_raises_training_error(self, architecture, quick_config, rng):
        def nan_log_prob(self, x):
            return torch.full((x.shape[0],), float("nan"), dtype=torch.float64, requires_grad=True)

        with patch.object(FlowModel, "log_prob", nan_log_prob):
            with pytest.raises(TrainingError) as info:
                train_flow(rng.normal(size=300), architecture, quick_config)
        assert info.value.epoch == 0
        assert info.value.batch == 0

    @pytest.mark.parametrize("samples, message", [
        (np.zeros((10, 2)), "do not fit arch"),
        (np.zeros((1, 1)), "at least two samples"),
        (np.array([0.0, np.inf, 1.0]), "must be finite"),
    ])
    def test_invalid_samples_raise_error(self, architecture, samples, message):
        with pytest.raises(ParameterError, match=message):
            train_flow(samples, architecture, TrainConfig(epochs=1))


class TestHeavyTailedBurst:
    """Test cases for training on an alpha-stable burst"""

    def test_density_stays_normalized(self, stable_burst):
        """Test mass 1 and a finite density after clipping an outlier far beyond 6 sigma"""
        z = float(stable_burst.z[0])
        samples = np.concatenate([stable_burst.samples, [[z + 200.0]]])
        architecture = FlowArchitecture(arch="nsf1d", n_layers=4, hidden_layers=2, hidden_units=16)
        with torch_threads(1):
            model = train_flow(samples, architecture, TrainConfig(epochs=10, batch_size=256, seed=2))
        shift, scale = float(model.shift[0]), float(model.scale[0])
        assert samples.max() - shift > architecture.clip_sigmas * scale

        # coarse grid over +-12 std plus a fine one over the burst core
        grid = np.unique(np.concatenate([
            np.linspace(shift - 12.0 * scale, shift + 12.0 * scale, 24001),
            np.linspace(z - 1.0, z + 1.0, 20001),
        ]))
        density = np.exp(flow_log_density(model, grid[:, None]))

        assert np.all(np.isfinite(density))
        assert np.all(density >= 0.0)
        assert integrate.simpson(density, x=grid) == pytest.approx(1.0, abs=1e-2)
        assert math.isfinite(flow_log_density(model, np.array([[z + 200.0]]))[0])

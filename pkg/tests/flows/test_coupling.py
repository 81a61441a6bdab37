"""
Tests for the affine coupling layer
"""
import math

import numpy as np
import pytest
import torch

from levy_extract.flows.coupling import AffineCoupling, coupling_forward, coupling_inverse


def pure_scaling(transform_index=1, scale_c=1.0 / 3.0):
    """mu = 0, nu = 0: the transformed coordinate is multiplied by 1/C"""
    layer = AffineCoupling(transform_index, scale_c, hidden_layers=2, hidden_units=4, identity_init=False)
    layer.mu.zero_output(0.0)
    layer.nu.zero_output()
    return layer


@pytest.fixture
def random_layer():
    torch.manual_seed(7)
    return AffineCoupling(0, 1.0 / 3.0, hidden_layers=2, hidden_units=8, identity_init=False)


class TestAffineCoupling:
    """Test cases for AffineCoupling"""

    def test_identity_init(self):
        layer = AffineCoupling(1, 1.0 / 3.0, hidden_layers=3, hidden_units=16)
        z, log_det = coupling_forward(np.array([0.4, -1.3]), layer)

        np.testing.assert_allclose(z, [0.4, -1.3], atol=1e-14)
        assert log_det == pytest.approx(0.0, abs=1e-14)

    def test_pure_scaling(self):
        """Test (1, 1) -> (1, 3) with log-det log 3 for C = 1/3"""
        layer = pure_scaling(transform_index=1)
        z, log_det = coupling_forward(np.array([1.0, 1.0]), layer)

        np.testing.assert_allclose(z, [1.0, 3.0], rtol=1e-14)
        assert log_det == pytest.approx(math.log(3.0), rel=1e-14)
        np.testing.assert_allclose(coupling_inverse(np.array([1.0, 3.0]), layer), [1.0, 1.0], rtol=1e-14)

    def test_pure_scaling_first_coordinate(self):
        layer = pure_scaling(transform_index=0, scale_c=0.5)
        z, log_det = coupling_forward(np.array([[2.0, -1.0]]), layer)

        np.testing.assert_allclose(z, [[4.0, -1.0]], rtol=1e-14)
        np.testing.assert_allclose(log_det, [math.log(2.0)], rtol=1e-14)

    def test_log_det_matches_finite_difference_jacobian(self, random_layer):
        """Test log|det J| against the central-difference Jacobian"""
        h = 1e-6
        for point in ([0.3, -0.8], [-1.5, 2.2], [0.0, 0.0]):
            x = np.array(point)
            jacobian = np.empty((2, 2))
            for j in range(2):
                step = np.zeros(2)
                step[j] = h
                jacobian[:, j] = (coupling_forward(x + step, random_layer)[0]
                                  - coupling_forward(x - step, random_layer)[0]) / (2 * h)
            _, log_det = coupling_forward(x, random_layer)
            assert log_det == pytest.approx(math.log(abs(np.linalg.det(jacobian))), abs=1e-6)

    def test_pass_through_coordinate_is_unchanged(self, random_layer):
        x = np.random.default_rng(1).normal(size=(50, 2))
        z, _ = coupling_forward(x, random_layer)
        np.testing.assert_array_equal(z[:, 1], x[:, 1])

    def test_inverse_roundtrip(self, random_layer):
        x = np.random.default_rng(2).normal(scale=2.0, size=(200, 2))
        z, _ = coupling_forward(x, random_layer)
        np.testing.assert_allclose(coupling_inverse(z, random_layer), x, atol=1e-10)

    def test_invalid_transform_index(self):
        with pytest.raises(ValueError, match="transform_index"):
            AffineCoupling(2)

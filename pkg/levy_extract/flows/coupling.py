"""
Affine coupling layer for 2D flows

The transformed coordinate is z_t = (x_t * exp(mu(x_c)) + nu(x_c)) / C, the
conditioning coordinate passes through, and log|det J| = mu(x_c) - log C.
"""
import math
from typing import Tuple

import numpy as np
import torch

from .base import FlowLayer
from .networks import DTYPE, DenseNet, hidden_sizes


class AffineCoupling(FlowLayer):
    """
    Scale-and-shift coupling with networks (mu, nu) of the pass-through coordinate

    Args:
        transform_index: coordinate that is transformed (0 -> x1, 1 -> x2)
        scale_c: hyperparameter C
        hidden_layers: hidden layers of mu and nu
        hidden_units: nodes per hidden layer
        identity_init: start as the identity map (mu bias = log C, nu = 0)
    """

    def __init__(self, transform_index: int, scale_c: float = 1.0 / 3.0, hidden_layers: int = 3,
                 hidden_units: int = 16, identity_init: bool = True):
        super().__init__()
        if transform_index not in (0, 1):
            raise ValueError(f"transform_index must be 0 or 1, got {transform_index}")
        self.transform_index = transform_index
        self.condition_index = 1 - transform_index
        self.scale_c = float(scale_c)
        sizes = [1, *hidden_sizes(hidden_layers, hidden_units), 1]
        self.mu = DenseNet(sizes)
        self.nu = DenseNet(sizes)
        if identity_init:
            self.mu.zero_output(bias=math.log(self.scale_c))
            self.nu.zero_output()

    def _split(self, x: torch.Tensor):
        return x[:, self.condition_index:self.condition_index + 1], x[:, self.transform_index]

    def _join(self, passthrough: torch.Tensor, transformed: torch.Tensor) -> torch.Tensor:
        cols = [None, None]
        cols[self.condition_index] = passthrough[:, 0]
        cols[self.transform_index] = transformed
        return torch.stack(cols, dim=1)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        cond, target = self._split(x)
        mu, nu = self.mu(cond)[:, 0], self.nu(cond)[:, 0]
        z_t = (target * torch.exp(mu) + nu) / self.scale_c
        return self._join(cond, z_t), mu - math.log(self.scale_c)

    def inverse(self, z: torch.Tensor) -> torch.Tensor:
        cond, target = self._split(z)
        mu, nu = self.mu(cond)[:, 0], self.nu(cond)[:, 0]
        x_t = (self.scale_c * target - nu) * torch.exp(-mu)
        return self._join(cond, x_t)


def _as_batch(points: np.ndarray) -> Tuple[torch.Tensor, bool]:
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    return torch.as_tensor(np.atleast_2d(arr), dtype=DTYPE), single


def coupling_forward(x: np.ndarray, layer: AffineCoupling):
    """
    Forward coupling on one 2-vector or a batch

    Returns:
        (z, log_det) as numpy (float log_det for a single point)
    """
    batch, single = _as_batch(x)
    with torch.no_grad():
        z, log_det = layer(batch)
    z, log_det = z.numpy(), log_det.numpy()
    return (z[0], float(log_det[0])) if single else (z, log_det)


def coupling_inverse(z: np.ndarray, layer: AffineCoupling) -> np.ndarray:
    """Inverse coupling on one 2-vector or a batch"""
    batch, single = _as_batch(z)
    with torch.no_grad():
        x = layer.inverse(batch).numpy()
    return x[0] if single else x

"""
Flow model: standardization, layer composition and standard-normal prior
"""
import logging
from contextlib import contextmanager
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn
from torch.distributions import Normal

from .base import FlowLayer
from .coupling import AffineCoupling
from .networks import DTYPE
from .spline import SplineLayer
from ..core.errors import TrainingError
from ..models.flow import FlowArchitecture, TrainConfig

logger = logging.getLogger(__name__)

# transform x2, then x1, then x2, ...
COUPLING_PATTERN = (1, 0)


def build_layers(architecture: FlowArchitecture) -> List[FlowLayer]:
    """Fresh layers for the given architecture"""
    if architecture.arch == "nsf1d":
        return [
            SplineLayer(architecture.n_bins, architecture.bound, architecture.hidden_layers, architecture.hidden_units)
            for _ in range(architecture.n_layers)
        ]
    return [
        AffineCoupling(COUPLING_PATTERN[k % 2], architecture.scale_c, architecture.hidden_layers,
                       architecture.hidden_units)
        for k in range(architecture.n_layers)
    ]


class FlowModel(nn.Module):
    """
    Density p(x) = p_z(T(u)) |det J_T(u)| / prod(scale), u = (x - shift) / scale

    Args:
        architecture: layer layout
        layers: transforms T_1..T_K (built from the architecture when omitted)
    """

    def __init__(self, architecture: FlowArchitecture, layers: Optional[Sequence[FlowLayer]] = None):
        super().__init__()
        self.architecture = architecture
        self.dim = architecture.dim
        self.layers = nn.ModuleList(layers if layers is not None else build_layers(architecture))
        self.register_buffer("shift", torch.zeros(self.dim, dtype=DTYPE))
        self.register_buffer("scale", torch.ones(self.dim, dtype=DTYPE))
        self.training_history: List[dict] = []
        self.train_config: Optional[TrainConfig] = None

    @classmethod
    def build(cls, architecture: FlowArchitecture, seed: Optional[int] = None) -> "FlowModel":
        """Construct with deterministic parameter initialization when seed is given"""
        if seed is None:
            return cls(architecture)
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            return cls(architecture)

    @property
    def scale_c(self) -> Optional[float]:
        return self.architecture.scale_c if self.architecture.arch == "realnvp2d" else None

    def set_standardization(self, shift: np.ndarray, scale: np.ndarray) -> None:
        with torch.no_grad():
            self.shift.copy_(torch.as_tensor(np.asarray(shift, dtype=float).reshape(self.dim)))
            self.scale.copy_(torch.as_tensor(np.asarray(scale, dtype=float).reshape(self.dim)))

    def layer_log_dets(self, x: torch.Tensor) -> Tuple[torch.Tensor, List[torch.Tensor]]:
        """Push x through the standardization and every layer, keeping per-layer log-dets"""
        u = (x - self.shift) / self.scale
        log_dets = [-torch.log(self.scale).sum().expand(x.shape[0])]
        for layer in self.layers:
            u, ld = layer(u)
            log_dets.append(ld)
        return u, log_dets

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        z, log_dets = self.layer_log_dets(x)
        return z, torch.stack(log_dets).sum(dim=0)

    def inverse(self, z: torch.Tensor) -> torch.Tensor:
        for layer in reversed(self.layers):
            z = layer.inverse(z)
        return z * self.scale + self.shift

    def log_prob(self, x: torch.Tensor) -> torch.Tensor:
        """log p_z(T(x)) + log|det J_T(x)| for x of shape (N, dim)"""
        z, log_det = self(x)
        prior = Normal(torch.zeros((), dtype=DTYPE), torch.ones((), dtype=DTYPE))
        return prior.log_prob(z).sum(dim=1) + log_det

    def _points(self, points: np.ndarray) -> torch.Tensor:
        arr = np.asarray(points, dtype=float)
        if arr.ndim == 0 or (arr.ndim == 1 and self.dim != 1):
            arr = arr.reshape(1, -1)
        return torch.as_tensor(arr.reshape(-1, self.dim), dtype=DTYPE)

    def log_density(self, points: np.ndarray) -> np.ndarray:
        """Numpy log density, points of shape (N, dim) -> (N,)"""
        with torch.no_grad():
            return self.log_prob(self._points(points)).numpy()

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Prior draws pushed through the inverse composition, shape (count, dim)"""
        z = torch.as_tensor(rng.standard_normal(size=(int(count), self.dim)), dtype=DTYPE)
        with torch.no_grad():
            return self.inverse(z).numpy()

    def parameter_vector(self) -> np.ndarray:
        return nn.utils.parameters_to_vector(self.parameters()).detach().numpy().copy()


def flow_log_density(model: FlowModel, x: np.ndarray) -> np.ndarray:
    """log p(x) under the model; scalar for a single point"""
    values = model.log_density(x)
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and model.dim != 1)
    return float(values[0]) if single else values


def flow_sample(model: FlowModel, count: int, rng: np.random.Generator) -> np.ndarray:
    """count draws from the model density"""
    return model.sample(count, rng)


def nll_loss_and_grad(model: FlowModel, batch: np.ndarray, batch_index: Optional[int] = None) -> Tuple[float, np.ndarray]:
    """
    Summed negative log-likelihood and its exact gradient over all network parameters

    Returns:
        (loss, gradient vector ordered like model.parameters())

    Raises:
        TrainingError: the loss is not finite
    """
    x = model._points(batch)
    if x.shape[0] == 0:
        raise ValueError("batch must not be empty")
    model.zero_grad()
    loss = -model.log_prob(x).sum()
    if not torch.isfinite(loss):
        raise TrainingError("non-finite loss", batch=batch_index)
    loss.backward()
    grads = [p.grad if p.grad is not None else torch.zeros_like(p) for p in model.parameters()]
    grad = torch.cat([g.reshape(-1) for g in grads]).numpy().copy()
    return float(loss.item()), grad


@contextmanager
def torch_threads(count: int = 1) -> Iterator[None]:
    """Pin torch intra-op threads; reductions then sum in the same order on every run"""
    previous = torch.get_num_threads()
    torch.set_num_threads(count)
    try:
        yield
    finally:
        torch.set_num_threads(previous)

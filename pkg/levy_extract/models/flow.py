"""
Flow architecture, spline parameter and training configuration models
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import RecordBase
from ..core.errors import ParameterError

ARCHITECTURES = ("nsf1d", "realnvp2d")
ARCH_DIM = {"nsf1d": 1, "realnvp2d": 2}


@dataclass
class RqSplineParams(RecordBase):
    """Knot widths/heights/derivatives of one monotonic rational-quadratic spline on [-B, B]"""
    widths: np.ndarray
    heights: np.ndarray
    derivs: np.ndarray
    bound: float = 3.0

    def __post_init__(self):
        """Validate knot quantities"""
        self.widths = np.asarray(self.widths, dtype=float)
        self.heights = np.asarray(self.heights, dtype=float)
        self.derivs = np.asarray(self.derivs, dtype=float)
        k = self.widths.shape[-1]
        if not self.bound > 0.0:
            raise ParameterError(f"bound must be positive, got {self.bound}")
        if self.heights.shape[-1] != k or self.derivs.shape[-1] != k - 1:
            raise ParameterError(f"need K widths, K heights and K-1 derivatives (K={k})")
        if np.any(self.widths <= 0) or np.any(self.heights <= 0) or np.any(self.derivs <= 0):
            raise ParameterError("widths, heights and interior derivatives must be positive")
        total = 2.0 * self.bound
        if not (np.allclose(self.widths.sum(-1), total, rtol=1e-10)
                and np.allclose(self.heights.sum(-1), total, rtol=1e-10)):
            raise ParameterError(f"widths and heights must each sum to 2B={total}")

    @property
    def n_bins(self) -> int:
        return self.widths.shape[-1]

    @classmethod
    def identity(cls, n_bins: int = 5, bound: float = 3.0) -> "RqSplineParams":
        """Uniform bins with unit derivatives: the identity map"""
        w = np.full(n_bins, 2.0 * bound / n_bins)
        return cls(widths=w, heights=w.copy(), derivs=np.ones(n_bins - 1), bound=bound)

    @classmethod
    def random(cls, rng: np.random.Generator, n_bins: int = 5, bound: float = 3.0) -> "RqSplineParams":
        """Random valid parameters (used for property checks)"""
        w = rng.uniform(0.2, 1.0, n_bins)
        h = rng.uniform(0.2, 1.0, n_bins)
        return cls(widths=2 * bound * w / w.sum(), heights=2 * bound * h / h.sum(),
                   derivs=rng.uniform(0.3, 3.0, n_bins - 1), bound=bound)


@dataclass
class FlowArchitecture(RecordBase):
    """Layer layout of a flow model"""
    arch: str = "nsf1d"
    n_layers: Optional[int] = None
    hidden_layers: int = 3
    hidden_units: Optional[int] = None
    n_bins: int = 5
    bound: float = 3.0
    scale_c: float = 1.0 / 3.0
    clip_sigmas: float = 6.0

    def __post_init__(self):
        """Fill per-architecture defaults and validate"""
        if self.arch not in ARCHITECTURES:
            raise ParameterError(f"arch must be one of {ARCHITECTURES}, got {self.arch!r}")
        if self.n_layers is None:
            self.n_layers = 32 if self.arch == "nsf1d" else 3
        if self.hidden_units is None:
            self.hidden_units = 32 if self.arch == "nsf1d" else 16
        if self.n_layers < 1 or self.hidden_layers < 0 or self.hidden_units < 1:
            raise ParameterError("n_layers, hidden_layers and hidden_units must be positive")
        if self.n_bins < 2:
            raise ParameterError(f"n_bins must be at least 2, got {self.n_bins}")
        if not self.bound > 0.0 or not self.scale_c > 0.0 or not self.clip_sigmas > 0.0:
            raise ParameterError("bound, scale_c and clip_sigmas must be positive")

    @property
    def dim(self) -> int:
        return ARCH_DIM[self.arch]


@dataclass
class TrainConfig(RecordBase):
    """Adam training schedule"""
    epochs: int = 300
    batch_size: int = 512
    learning_rate: float = 1e-3
    betas: tuple = (0.9, 0.999)
    validation_fraction: float = 0.1
    seed: int = 0

    def __post_init__(self):
        """Validate training settings"""
        self.betas = tuple(float(b) for b in self.betas)
        if self.epochs < 1 or self.batch_size < 1:
            raise ParameterError("epochs and batch_size must be positive")
        if not self.learning_rate > 0.0:
            raise ParameterError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ParameterError(f"validation_fraction must lie in (0, 1), got {self.validation_fraction}")
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            raise ParameterError(f"betas must be two values in [0, 1), got {self.betas}")

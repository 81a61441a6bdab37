"""
SDE definition and short-burst dataset models
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .base import RecordBase
from ..core.errors import ParameterError

DEFAULT_DT_FRACTION = 1e-3


@dataclass
class StableParams(RecordBase):
    """Symmetric alpha-stable noise parameters"""
    alpha: float
    sigma: float = 1.0
    dim: int = 1

    def __post_init__(self):
        """Validate stable parameters after initialization"""
        if not 0.0 < self.alpha <= 2.0:
            raise ParameterError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not self.sigma > 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        self.dim = int(self.dim)


@dataclass
class SdeSpec(RecordBase):
    """dx = b(x)dt + Lambda(x)dB + sigma dL, fields given as expressions over x1..xn"""
    drift: List[str]
    diffusion_matrix: List[List[str]]
    stable: Optional[StableParams]
    t_star: float
    dt: Optional[float] = None

    def __post_init__(self):
        """Validate shapes and time settings"""
        if isinstance(self.stable, dict):
            self.stable = StableParams.from_dict(self.stable)
        self.drift = [str(e) for e in self.drift]
        self.diffusion_matrix = [[str(e) for e in row] for row in self.diffusion_matrix]
        n = len(self.drift)
        if n < 1:
            raise ParameterError("drift must have at least one component")
        if len(self.diffusion_matrix) != n or any(len(row) != n for row in self.diffusion_matrix):
            raise ParameterError(f"diffusion_matrix must be {n}x{n}")
        if self.stable is not None and self.stable.dim != n:
            raise ParameterError(f"stable.dim={self.stable.dim} does not match drift dimension {n}")
        if not self.t_star > 0.0:
            raise ParameterError(f"t_star must be positive, got {self.t_star}")
        if self.dt is None:
            self.dt = self.t_star * DEFAULT_DT_FRACTION
        if not 0.0 < self.dt <= self.t_star:
            raise ParameterError(f"dt must lie in (0, t_star], got {self.dt}")
        ratio = self.t_star / self.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ParameterError(f"t_star/dt must be an integer, got {ratio}")

    @property
    def dim(self) -> int:
        return len(self.drift)

    @property
    def n_steps(self) -> int:
        """Number of Euler-Maruyama steps per burst"""
        return int(round(self.t_star / self.dt))

    def to_dict(self) -> dict:
        return {
            "drift": list(self.drift),
            "diffusion_matrix": [list(row) for row in self.diffusion_matrix],
            "stable": None if self.stable is None else self.stable.to_dict(),
            "t_star": self.t_star,
            "dt": self.dt,
        }


@dataclass
class Burst(RecordBase):
    """Endpoints x(t*) of independent trajectories started at z"""
    z: np.ndarray
    samples: np.ndarray

    def __post_init__(self):
        self.z = np.atleast_1d(np.asarray(self.z, dtype=float))
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        if self.samples.ndim != 2 or self.samples.shape[1] != self.z.shape[0]:
            raise ParameterError(
                f"samples shape {self.samples.shape} does not match z dimension {self.z.shape[0]}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ParameterError("burst samples must be finite")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]


@dataclass
class BurstDataset(RecordBase):
    """One burst per grid point, all sharing t* and sample count"""
    bursts: List[Burst]
    t_star: float
    seed: int
    spec_hash: str
    spec: Optional[SdeSpec] = field(default=None, compare=False)

    def __post_init__(self):
        """Validate dataset consistency after initialization"""
        if not self.bursts:
            raise ParameterError("dataset must contain at least one burst")
        counts = {b.n_samples for b in self.bursts}
        dims = {b.z.shape[0] for b in self.bursts}
        if len(counts) != 1:
            raise ParameterError(f"bursts have differing sample counts: {sorted(counts)}")
        if len(dims) != 1:
            raise ParameterError(f"bursts have differing dimensions: {sorted(dims)}")
        if not math.isfinite(self.t_star) or self.t_star <= 0:
            raise ParameterError(f"t_star must be positive, got {self.t_star}")

    @property
    def dim(self) -> int:
        return self.bursts[0].z.shape[0]

    @property
    def n_samples(self) -> int:
        return self.bursts[0].n_samples

    @property
    def z_grid(self) -> np.ndarray:
        return np.stack([b.z for b in self.bursts])

    def metadata(self) -> dict:
        """Contents of meta.json"""
        return {
            "t_star": self.t_star,
            "seed": self.seed,
            "spec_hash": self.spec_hash,
            "dim": self.dim,
            "n_samples": self.n_samples,
            "grid": self.z_grid.tolist(),
            "spec": None if self.spec is None else self.spec.to_dict(),
        }

    def __eq__(self, other) -> bool:
        """Bit-level comparison of two datasets"""
        if not isinstance(other, BurstDataset):
            return False
        if (self.t_star, self.seed, self.spec_hash, len(self.bursts)) != (
            other.t_star, other.seed, other.spec_hash, len(other.bursts)
        ):
            return False
        return all(
            np.array_equal(a.z, b.z) and np.array_equal(a.samples, b.samples)
            for a, b in zip(self.bursts, other.bursts)
        )

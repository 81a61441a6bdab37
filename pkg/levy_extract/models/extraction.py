"""
Extraction settings and results
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .base import RecordBase
from ..core.errors import ParameterError

DEFAULT_JUMP_EPS = (0.3, 0.5, 0.8, 1.2)
DEFAULT_QUAD_RESOLUTION = {1: 201, 2: 129}
JUMP_SOURCES = ("flow", "raw")
FIELD_SOURCES = ("flow", "samples")


@dataclass
class ExtractionSettings(RecordBase):
    """Estimator settings for one extraction run"""
    jump_eps: List[float] = field(default_factory=lambda: list(DEFAULT_JUMP_EPS))
    m: float = 2.0
    ball_eps: float = 0.5
    quad_resolution: Optional[int] = None
    jump_source: str = "flow"
    field_source: str = "flow"
    fit_jumps: bool = True
    resample_count: Optional[int] = None

    def __post_init__(self):
        """Validate estimator settings"""
        self.jump_eps = [float(e) for e in self.jump_eps]
        if any(not e > 0.0 for e in self.jump_eps):
            raise ParameterError(f"jump_eps entries must be positive, got {self.jump_eps}")
        if self.fit_jumps and len(set(self.jump_eps)) < 2:
            raise ParameterError("jump_eps needs at least two distinct values")
        if not self.m > 1.0:
            raise ParameterError(f"m must exceed 1, got {self.m}")
        if not self.ball_eps > 0.0:
            raise ParameterError(f"ball_eps must be positive, got {self.ball_eps}")
        if self.jump_source not in JUMP_SOURCES:
            raise ParameterError(f"jump_source must be one of {JUMP_SOURCES}, got {self.jump_source!r}")
        if self.field_source not in FIELD_SOURCES:
            raise ParameterError(f"field_source must be one of {FIELD_SOURCES}, got {self.field_source!r}")
        if self.resample_count is not None and self.resample_count < 1:
            raise ParameterError(f"resample_count must be positive, got {self.resample_count}")

    def resolution_for(self, dim: int) -> int:
        return int(self.quad_resolution or DEFAULT_QUAD_RESOLUTION[dim])


@dataclass
class JumpEstimate(RecordBase):
    """Fitted (alpha, sigma) of the isotropic stable jump measure"""
    alpha_hat: float
    sigma_hat: float
    epsilons: List[float]
    m: float
    dim: int
    pooled_rates: List[float]
    residual: float
    source: str = "flow"
    per_z_counts: List[Dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        """Validate fitted parameters"""
        if not 0.0 < self.alpha_hat < 2.0:
            raise ParameterError(f"alpha_hat must lie in (0, 2), got {self.alpha_hat}")
        if not self.sigma_hat > 0.0:
            raise ParameterError(f"sigma_hat must be positive, got {self.sigma_hat}")

    def __str__(self) -> str:
        return (f"alpha={self.alpha_hat:.4f}, sigma={self.sigma_hat:.4f} "
                f"(source={self.source}, residual={self.residual:.3g})")


@dataclass
class FieldEstimate(RecordBase):
    """Drift and diffusion estimates on the evaluation grid"""
    grid: np.ndarray
    drift: np.ndarray
    diffusion: np.ndarray
    epsilon: float
    quad_points: int
    source: str = "flow"
    clamped: List[int] = field(default_factory=list)
    failed: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        """Validate shapes and symmetry"""
        self.grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        self.drift = np.asarray(self.drift, dtype=float).reshape(self.grid.shape)
        g, n = self.grid.shape
        self.diffusion = np.asarray(self.diffusion, dtype=float).reshape(g, n, n)
        self.failed = {int(k): str(v) for k, v in self.failed.items()}
        self.clamped = [int(i) for i in self.clamped]
        ok = ~np.isnan(self.diffusion)
        if not np.array_equal(self.diffusion[ok], np.swapaxes(self.diffusion, 1, 2)[ok]):
            raise ParameterError("diffusion matrices must be symmetric")

    @property
    def dim(self) -> int:
        return self.grid.shape[1]


@dataclass
class ExtractionResult(RecordBase):
    """Jump estimate plus fields, with full settings provenance"""
    jump: Optional[JumpEstimate]
    fields: FieldEstimate
    settings: ExtractionSettings
    t_star: float
    provenance: Dict[str, Any] = field(default_factory=dict)
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Contents of result.json (fields are stored in the CSVs)"""
        return {
            "alpha_hat": None if self.jump is None else self.jump.alpha_hat,
            "sigma_hat": None if self.jump is None else self.jump.sigma_hat,
            "t_star": self.t_star,
            "jump": None if self.jump is None else self.jump.to_dict(),
            "settings": self.settings.to_dict(),
            "field_epsilon": self.fields.epsilon,
            "quad_points": self.fields.quad_points,
            "field_source": self.fields.source,
            "clamped": list(self.fields.clamped),
            "failed": {str(k): v for k, v in sorted(self.fields.failed.items())},
            "provenance": self.provenance,
            "diagnostics": self.diagnostics,
        }

    def summary(self) -> str:
        n_failed = len(self.fields.failed)
        jump = "jumps not fitted" if self.jump is None else str(self.jump)
        return f"{jump}; {len(self.fields.grid)} points, {n_failed} failed, {len(self.fields.clamped)} clamped"


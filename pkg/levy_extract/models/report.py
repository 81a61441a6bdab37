"""
Run report models
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from .base import RecordBase
from ..core.errors import ParameterError


@dataclass
class ReportTables:
    """Field estimates read back from drift.csv / diffusion.csv"""
    grid: np.ndarray
    resolution: List[int]
    drift_hat: np.ndarray
    diffusion_hat: np.ndarray
    drift_true: Optional[np.ndarray] = None
    diffusion_true: Optional[np.ndarray] = None
    interior: Optional[np.ndarray] = None

    def __post_init__(self):
        self.grid = np.atleast_2d(np.asarray(self.grid, dtype=float))
        g, n = self.grid.shape
        if int(np.prod(self.resolution)) != g:
            raise ParameterError(f"resolution {self.resolution} does not match {g} grid points")
        if self.interior is None:
            self.interior = np.ones(g, dtype=bool)

    @property
    def dim(self) -> int:
        return self.grid.shape[1]

    @property
    def truth_known(self) -> bool:
        return self.drift_true is not None and self.diffusion_true is not None


@dataclass
class ErrorNorm(RecordBase):
    """Error of one field component over the interior grid points"""
    quantity: str
    n_points: int
    max_abs_estimate: Optional[float]
    rel_l2: Optional[float] = None
    max_abs_error: Optional[float] = None
    # boundary points included
    max_abs_all: Optional[float] = None


@dataclass
class AcceptanceCheck(RecordBase):
    """One pass/fail criterion"""
    criterion: str
    value: Optional[float]
    bound: Any
    passed: bool


@dataclass
class RunReport(RecordBase):
    """Summary of one run; every number is recomputed from persisted files"""
    experiment: str
    jump: Optional[Dict[str, Any]]
    errors: List[ErrorNorm]
    acceptance: List[AcceptanceCheck]
    stage_seconds: Dict[str, float]
    artifacts: Dict[str, str]
    n_points: int
    n_interior: int
    failed_points: List[int] = field(default_factory=list)
    clamped_points: List[int] = field(default_factory=list)
    truth_known: bool = False
    reference: Dict[str, float] = field(default_factory=dict)
    tables: Optional[ReportTables] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        """Contents of report.json"""
        return {
            "experiment": self.experiment,
            "jump": self.jump,
            "errors": [e.to_dict() for e in self.errors],
            "acceptance": [c.to_dict() for c in self.acceptance],
            "passed": self.passed,
            "stage_seconds": dict(self.stage_seconds),
            "artifacts": dict(self.artifacts),
            "n_points": self.n_points,
            "n_interior": self.n_interior,
            "failed_points": list(self.failed_points),
            "clamped_points": list(self.clamped_points),
            "truth_known": self.truth_known,
            "reference": dict(self.reference),
        }

    @property
    def passed(self) -> Optional[bool]:
        """None when no acceptance criterion is configured"""
        if not self.acceptance:
            return None
        return all(c.passed for c in self.acceptance)

    def error_table(self) -> List[List[Any]]:
        return [[e.quantity, e.n_points, e.rel_l2, e.max_abs_error, e.max_abs_estimate] for e in self.errors]

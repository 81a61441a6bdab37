"""
Run configuration: one JSON file per experiment
"""
import json
import logging
import os
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from ..core.errors import ConfigValidationError, MissingInputError, ParameterError
from ..core.expressions import compile_sde
from ..core.simulator import validate_fields_on_grid
from ..models.base import RecordBase, digest_of
from ..models.extraction import ExtractionSettings
from ..models.flow import FlowArchitecture, TrainConfig
from ..models.sde import SdeSpec, StableParams

logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "LEVY_EXTRACT_OUTPUT_ROOT"
TOP_LEVEL_KEYS = ("experiment", "seed", "output_dir", "sde", "grid", "training", "extraction", "acceptance")


@dataclass
class GridConfig(RecordBase):
    """Tensor grid of initial points plus the burst sample count"""
    ranges: List[List[float]]
    resolution: List[int]
    n_samples: int = 10000

    def __post_init__(self):
        """Validate ranges and resolution"""
        self.ranges = [[float(lo), float(hi)] for lo, hi in self.ranges]
        if isinstance(self.resolution, int):
            self.resolution = [self.resolution] * len(self.ranges)
        self.resolution = [int(r) for r in self.resolution]
        if not self.ranges:
            raise ParameterError("grid.ranges must not be empty")
        if len(self.resolution) != len(self.ranges):
            raise ParameterError(f"grid.resolution needs {len(self.ranges)} entries")
        if any(hi <= lo for lo, hi in self.ranges):
            raise ParameterError(f"every grid range must satisfy lo < hi, got {self.ranges}")
        if any(r < 1 for r in self.resolution):
            raise ParameterError(f"grid.resolution entries must be positive, got {self.resolution}")
        if self.n_samples < 2:
            raise ParameterError(f"grid.n_samples must be at least 2, got {self.n_samples}")

    @property
    def dim(self) -> int:
        return len(self.ranges)

    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, r) for (lo, hi), r in zip(self.ranges, self.resolution)]

    def points(self) -> np.ndarray:
        """Grid points of shape (G, dim), first coordinate varying slowest"""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def default_margin(self) -> float:
        """One grid step (the coarsest axis), so only boundary points are excluded"""
        steps = [(hi - lo) / (r - 1) for (lo, hi), r in zip(self.ranges, self.resolution) if r > 1]
        return max(steps) if steps else 0.0


@dataclass
class TrainingConfig(RecordBase):
    """Flow architecture plus optimizer schedule"""
    architecture: FlowArchitecture
    schedule: TrainConfig

    def to_dict(self) -> dict:
        payload = self.architecture.to_dict()
        schedule = self.schedule.to_dict()
        schedule.pop("seed")
        payload.update(schedule)
        return payload

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingConfig":
        arch_keys = {f.name for f in fields(FlowArchitecture)}
        schedule_keys = {f.name for f in fields(TrainConfig)} - {"seed"}
        unknown = set(data) - arch_keys - schedule_keys
        if unknown:
            raise ConfigValidationError(f"unknown keys {sorted(unknown)}", f"training.{sorted(unknown)[0]}")
        return cls(
            architecture=FlowArchitecture(**{k: v for k, v in data.items() if k in arch_keys}),
            schedule=TrainConfig(**{k: v for k, v in data.items() if k in schedule_keys}),
        )


@dataclass
class AcceptanceConfig(RecordBase):
    """Pass/fail bands evaluated by the report on interior grid points"""
    alpha_range: Optional[List[float]] = None
    sigma_range: Optional[List[float]] = None
    drift_rel_l2: Optional[float] = None
    diffusion_rel_l2: Optional[float] = None
    diffusion_abs_max: Optional[float] = None
    offdiag_abs_max: Optional[float] = None
    interior_margin: Optional[float] = None
    reference: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        """Validate bands"""
        for name in ("alpha_range", "sigma_range"):
            band = getattr(self, name)
            if band is not None:
                band = [float(v) for v in band]
                if len(band) != 2 or band[0] > band[1]:
                    raise ParameterError(f"{name} must be [lo, hi] with lo <= hi, got {band}")
                setattr(self, name, band)
        for name in ("drift_rel_l2", "diffusion_rel_l2", "diffusion_abs_max", "offdiag_abs_max", "interior_margin"):
            value = getattr(self, name)
            if value is not None and not float(value) >= 0.0:
                raise ParameterError(f"{name} must be non-negative, got {value}")
        self.reference = {str(k): float(v) for k, v in self.reference.items()}


@dataclass
class RunConfig(RecordBase):
    """Everything one experiment run depends on"""
    experiment: str
    sde: SdeSpec
    grid: GridConfig
    training: TrainingConfig
    extraction: ExtractionSettings = field(default_factory=ExtractionSettings)
    acceptance: AcceptanceConfig = field(default_factory=AcceptanceConfig)
    seed: int = 0
    output_dir: Optional[str] = None

    def __post_init__(self):
        """Cross-block consistency"""
        if not re.fullmatch(r"[A-Za-z0-9_.\-]+", self.experiment or ""):
            raise ConfigValidationError(f"invalid experiment name {self.experiment!r}", "experiment")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigValidationError(f"seed must be a non-negative integer, got {self.seed}", "seed")
        self.seed = int(self.seed)
        if self.grid.dim != self.sde.dim:
            raise ConfigValidationError(
                f"grid has dimension {self.grid.dim} but the SDE has dimension {self.sde.dim}", "grid.ranges")
        if self.training.architecture.dim != self.sde.dim:
            raise ConfigValidationError(
                f"arch {self.training.architecture.arch} is {self.training.architecture.dim}D "
                f"but the SDE is {self.sde.dim}D", "training.arch")
        if self.extraction.fit_jumps and self.sde.stable is None:
            raise ConfigValidationError("fit_jumps requires a Levy term in sde.stable", "extraction.fit_jumps")
        if self.output_dir is None:
            self.output_dir = os.path.join("runs", self.experiment)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "sde": self.sde.to_dict(),
            "grid": self.grid.to_dict(),
            "training": self.training.to_dict(),
            "extraction": self.extraction.to_dict(),
            "acceptance": self.acceptance.to_dict(),
        }

    def output_path(self) -> Path:
        """output_dir resolved against LEVY_EXTRACT_OUTPUT_ROOT (or the working directory)"""
        path = Path(self.output_dir)
        if path.is_absolute():
            return path
        root = os.environ.get(OUTPUT_ROOT_ENV)
        return (Path(root) if root else Path.cwd()) / path

    def interior_margin(self) -> float:
        if self.acceptance.interior_margin is not None:
            return float(self.acceptance.interior_margin)
        return self.grid.default_margin()

    # stage digests chain downstream: a change invalidates its stage and everything after it
    def dataset_digest(self) -> str:
        return digest_of({"sde": self.sde.to_dict(), "grid": self.grid.to_dict(), "seed": self.seed})

    def models_digest(self) -> str:
        return digest_of({"dataset": self.dataset_digest(), "training": self.training.to_dict()})

    def extraction_digest(self) -> str:
        return digest_of({"models": self.models_digest(), "extraction": self.extraction.to_dict()})

    def report_digest(self) -> str:
        return digest_of({"extraction": self.extraction_digest(), "acceptance": self.acceptance.to_dict(),
                          "margin": self.interior_margin()})


def line_of(text: str, path: str) -> Optional[int]:
    """1-based line of the last key of a dotted path (list indices ignored), None if absent"""
    position = 0
    found = None
    for key in re.findall(r"[^.\[\]]+", path):
        if key.isdigit():
            continue
        match = re.compile(r'"%s"\s*:' % re.escape(key)).search(text, position)
        if match is None:
            break
        position = match.end()
        found = text.count("\n", 0, match.start()) + 1
    return found


def _block(raw: Dict[str, Any], name: str, kind: type) -> Dict[str, Any]:
    value = raw.get(name, {})
    if value is None:
        value = {}
    if not isinstance(value, kind):
        raise ConfigValidationError(f"must be a {kind.__name__}", name)
    return value


def _build(path: str, factory, payload: Dict[str, Any]):
    known = {f.name for f in fields(factory)}
    unknown = set(payload) - known
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigValidationError(f"unknown key {key!r}", f"{path}.{key}")
    try:
        return factory(**payload)
    except ConfigValidationError:
        raise
    except (ParameterError, TypeError, ValueError) as e:
        message = str(e)
        hit = next((k for k in payload if re.search(r"\b%s\b" % re.escape(k), message)), None)
        raise ConfigValidationError(message, f"{path}.{hit}" if hit else path) from e


def run_config_from_dict(raw: Dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig from parsed JSON"""
    if not isinstance(raw, dict):
        raise ConfigValidationError("top level must be an object")
    unknown = set(raw) - set(TOP_LEVEL_KEYS)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigValidationError(f"unknown key {key!r}", key)
    for key in ("experiment", "sde", "grid"):
        if key not in raw:
            raise ConfigValidationError("required key missing", key)

    sde_raw = dict(_block(raw, "sde", dict))
    stable = sde_raw.get("stable")
    if isinstance(stable, dict):
        stable = dict(stable)
        stable.setdefault("dim", len(sde_raw.get("drift") or []))
        sde_raw["stable"] = _build("sde.stable", StableParams, stable)
    elif stable is not None:
        raise ConfigValidationError("must be an object or null", "sde.stable")
    else:
        sde_raw["stable"] = None
    sde = _build("sde", SdeSpec, sde_raw)

    grid = _build("grid", GridConfig, _block(raw, "grid", dict))
    training_raw = dict(_block(raw, "training", dict))
    training_raw.setdefault("arch", "nsf1d" if sde.dim == 1 else "realnvp2d")
    try:
        training = TrainingConfig.from_dict(training_raw)
    except ConfigValidationError:
        raise
    except (ParameterError, TypeError) as e:
        hit = next((k for k in training_raw if k in str(e)), None)
        raise ConfigValidationError(str(e), f"training.{hit}" if hit else "training") from e
    extraction = _build("extraction", ExtractionSettings, _block(raw, "extraction", dict))
    acceptance = _build("acceptance", AcceptanceConfig, _block(raw, "acceptance", dict))

    config = RunConfig(experiment=raw["experiment"], sde=sde, grid=grid, training=training,
                       extraction=extraction, acceptance=acceptance, seed=raw.get("seed", 0),
                       output_dir=raw.get("output_dir"))
    validate_fields_on_grid(compile_sde(sde), grid.points())
    return config


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a run-config file

    Raises:
        MissingInputError: the file does not exist
        ConfigValidationError: invalid content, with key path and line number
    """
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigValidationError(f"invalid JSON: {e.msg}", "", e.lineno) from e
    try:
        config = run_config_from_dict(raw)
    except ConfigValidationError as e:
        if e.line is None and e.path:
            raise ConfigValidationError(e.detail, e.path, line_of(text, e.path)) from e
        raise
    logger.info(f"設定ファイル読み込み完了: {path} (experiment={config.experiment})")
    return config


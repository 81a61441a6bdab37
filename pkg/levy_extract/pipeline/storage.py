"""
On-disk layout of datasets, results and stage manifests
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from ..core.errors import MissingInputError, ParameterError
from ..core.fileio import file_sha256, read_json, read_table, write_json, write_table
from ..models.base import RecordBase
from ..models.sde import Burst, BurstDataset, SdeSpec

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
META_FILE = "meta.json"
MANIFEST_FILE = "stage.json"
STAGES = ("dataset", "models", "extraction", "report")


def burst_file_name(index: int) -> str:
    return f"burst_{index:04d}.csv"


def save_dataset(dataset: BurstDataset, directory: PathLike) -> Dict[str, str]:
    """
    Write meta.json plus one burst_<idx>.csv per grid point

    Returns:
        mapping of file name to SHA-256
    """
    directory = Path(directory)
    columns = [f"x{i + 1}" for i in range(dataset.dim)]
    files = {}
    for index, burst in enumerate(dataset.bursts):
        name = burst_file_name(index)
        files[name] = file_sha256(write_table(directory / name, columns, burst.samples))
    files[META_FILE] = file_sha256(write_json(directory / META_FILE, dataset.metadata()))
    logger.info(f"データセット保存: {directory} ({len(dataset.bursts)} bursts)")
    return files


def load_dataset(directory: PathLike) -> BurstDataset:
    """
    Read a dataset directory and check it against its meta.json

    Raises:
        MissingInputError: directory, meta.json or a burst file is absent
        ParameterError: shapes or values disagree with the metadata
    """
    directory = Path(directory)
    meta = read_json(directory / META_FILE)
    grid = np.atleast_2d(np.asarray(meta.get("grid"), dtype=float))
    dim, n_samples = int(meta["dim"]), int(meta["n_samples"])
    if grid.shape[1] != dim:
        raise ParameterError(f"{directory}: grid dimension {grid.shape[1]} but dim={dim}")
    bursts = []
    for index, z in enumerate(grid):
        table = read_table(directory / burst_file_name(index))
        names = [f"x{i + 1}" for i in range(dim)]
        if list(table) != names:
            raise ParameterError(f"{burst_file_name(index)}: expected columns {names}, got {list(table)}")
        samples = np.stack([table[n] for n in names], axis=1)
        if len(samples) != n_samples:
            raise ParameterError(f"{burst_file_name(index)}: {len(samples)} rows, meta says {n_samples}")
        bursts.append(Burst(z=z, samples=samples))
    spec = SdeSpec.from_dict(meta["spec"]) if meta.get("spec") else None
    return BurstDataset(bursts=bursts, t_star=float(meta["t_star"]), seed=int(meta["seed"]),
                        spec_hash=str(meta["spec_hash"]), spec=spec)


@dataclass
class StageManifest(RecordBase):
    """stage.json: identity and outcome of one pipeline stage"""
    stage: str
    input_digest: str
    status: str = "complete"
    elapsed_seconds: float = 0.0
    files: Dict[str, str] = field(default_factory=dict)
    failed: Dict[str, str] = field(default_factory=dict)
    finished_at: float = field(default_factory=time.time)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ParameterError(f"unknown stage {self.stage!r}; expected one of {STAGES}")


def write_manifest(directory: PathLike, manifest: StageManifest) -> Path:
    return write_json(Path(directory) / MANIFEST_FILE, manifest.to_dict())


def read_manifest(directory: PathLike) -> Optional[StageManifest]:
    """Manifest of a stage directory, None when absent or unreadable"""
    path = Path(directory) / MANIFEST_FILE
    if not path.is_file():
        return None
    try:
        return StageManifest.from_dict(read_json(path))
    except (MissingInputError, ParameterError, TypeError) as e:
        logger.warning(f"ステージマニフェストを読めません: {path}: {e}")
        return None


def files_intact(directory: PathLike, files: Dict[str, str]) -> bool:
    """Every recorded file exists with the recorded SHA-256"""
    directory = Path(directory)
    for name, digest in files.items():
        path = directory / name
        if not path.is_file() or file_sha256(path) != digest:
            return False
    return True


def artifact_inventory(root: PathLike) -> Dict[str, str]:
    """Relative path -> SHA-256 of every file under root"""
    root = Path(root)
    return {
        str(path.relative_to(root)): file_sha256(path)
        for path in sorted(root.rglob("*"))
        if path.is_file() and not path.name.startswith(".")
    }

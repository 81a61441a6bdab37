"""
Run report: error norms and acceptance checks recomputed from persisted files
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig
from .storage import STAGES, artifact_inventory, read_manifest
from ..core.errors import MissingInputError
from ..core.fileio import read_json, read_table
from ..exporters.csv_file import DIFFUSION_FILE, DRIFT_FILE, upper_pairs
from ..models.extraction import ExtractionResult, ExtractionSettings, FieldEstimate, JumpEstimate
from ..models.report import AcceptanceCheck, ErrorNorm, ReportTables, RunReport

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
# slack for comparing grid coordinates against range bounds
EDGE_TOL = 1e-9


def interior_mask(grid: np.ndarray, ranges: Sequence[Sequence[float]], margin: float) -> np.ndarray:
    """Points at least `margin` away from every range bound"""
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    return np.all((grid - lo >= margin - EDGE_TOL) & (hi - grid >= margin - EDGE_TOL), axis=1)


def _matrix_columns(table: Dict[str, np.ndarray], n: int, suffix: str) -> Optional[np.ndarray]:
    pairs = upper_pairs(n)
    if any(f"a{i + 1}{j + 1}_{suffix}" not in table for i, j in pairs):
        return None
    g = len(next(iter(table.values())))
    out = np.empty((g, n, n))
    for i, j in pairs:
        out[:, i, j] = out[:, j, i] = table[f"a{i + 1}{j + 1}_{suffix}"]
    return out


def load_report_tables(directory: Path, resolution: Sequence[int], ranges: Sequence[Sequence[float]],
                       margin: float) -> ReportTables:
    """Field tables from drift.csv and diffusion.csv"""
    drift = read_table(directory / DRIFT_FILE)
    diffusion = read_table(directory / DIFFUSION_FILE)
    n = sum(1 for name in drift if name.startswith("z"))
    grid = np.stack([drift[f"z{i + 1}"] for i in range(n)], axis=1)
    drift_true = None
    if all(f"b{i + 1}_true" in drift for i in range(n)):
        drift_true = np.stack([drift[f"b{i + 1}_true"] for i in range(n)], axis=1)
    return ReportTables(
        grid=grid,
        resolution=list(resolution),
        drift_hat=np.stack([drift[f"b{i + 1}_hat"] for i in range(n)], axis=1),
        diffusion_hat=_matrix_columns(diffusion, n, "hat"),
        drift_true=drift_true,
        diffusion_true=_matrix_columns(diffusion, n, "true"),
        interior=interior_mask(grid, ranges, margin),
    )


def load_extraction_result(directory: Path) -> ExtractionResult:
    """Rebuild an ExtractionResult from result.json and the field tables"""
    payload = read_json(directory / RESULT_FILE)
    drift = read_table(directory / DRIFT_FILE)
    diffusion = read_table(directory / DIFFUSION_FILE)
    n = sum(1 for name in drift if name.startswith("z"))
    grid = np.stack([drift[f"z{i + 1}"] for i in range(n)], axis=1)
    fields = FieldEstimate(
        grid=grid,
        drift=np.stack([drift[f"b{i + 1}_hat"] for i in range(n)], axis=1),
        diffusion=_matrix_columns(diffusion, n, "hat"),
        epsilon=payload["field_epsilon"],
        quad_points=payload["quad_points"],
        source=payload["field_source"],
        clamped=payload["clamped"],
        failed=payload["failed"],
    )
    jump = JumpEstimate.from_dict(payload["jump"]) if payload.get("jump") else None
    return ExtractionResult(jump=jump, fields=fields, settings=ExtractionSettings.from_dict(payload["settings"]),
                            t_star=payload["t_star"], provenance=payload.get("provenance", {}),
                            diagnostics=payload.get("diagnostics", {}))


def _norm(quantity: str, estimate: np.ndarray, truth: Optional[np.ndarray], mask: np.ndarray) -> ErrorNorm:
    keep = mask & np.isfinite(estimate)
    est = estimate[keep]
    finite = estimate[np.isfinite(estimate)]
    norm = ErrorNorm(quantity=quantity, n_points=int(keep.sum()),
                     max_abs_estimate=float(np.abs(est).max()) if est.size else None,
                     max_abs_all=float(np.abs(finite).max()) if finite.size else None)
    if truth is not None and est.size:
        true = truth[keep]
        norm.max_abs_error = float(np.abs(est - true).max())
        scale = float(np.linalg.norm(true))
        norm.rel_l2 = float(np.linalg.norm(est - true) / scale) if scale > 0.0 else None
    return norm


def error_norms(tables: ReportTables) -> List[ErrorNorm]:
    """Per-component errors over interior points (boundary points reported, not scored)"""
    norms = []
    for i in range(tables.dim):
        truth = None if tables.drift_true is None else tables.drift_true[:, i]
        norms.append(_norm(f"b{i + 1}", tables.drift_hat[:, i], truth, tables.interior))
    for i, j in upper_pairs(tables.dim):
        truth = None if tables.diffusion_true is None else tables.diffusion_true[:, i, j]
        norms.append(_norm(f"a{i + 1}{j + 1}", tables.diffusion_hat[:, i, j], truth, tables.interior))
    return norms


def _band(name: str, value: Optional[float], band: Sequence[float]) -> AcceptanceCheck:
    passed = value is not None and band[0] <= value <= band[1]
    return AcceptanceCheck(criterion=name, value=value, bound=list(band), passed=bool(passed))


def _at_most(name: str, value: Optional[float], bound: float) -> AcceptanceCheck:
    passed = value is not None and value <= bound
    return AcceptanceCheck(criterion=name, value=value, bound=bound, passed=bool(passed))


def acceptance_checks(config: RunConfig, jump: Optional[dict], norms: List[ErrorNorm],
                      truth_known: bool = True) -> List[AcceptanceCheck]:
    """Evaluate every configured acceptance band (relative errors need the true fields)"""
    acceptance = config.acceptance
    checks = []
    if acceptance.alpha_range is not None:
        checks.append(_band("alpha_hat", None if not jump else jump["alpha_hat"], acceptance.alpha_range))
    if acceptance.sigma_range is not None:
        checks.append(_band("sigma_hat", None if not jump else jump["sigma_hat"], acceptance.sigma_range))
    drift = [e for e in norms if e.quantity.startswith("b")]
    diffusion = [e for e in norms if e.quantity.startswith("a")]
    diagonal = [e for e in diffusion if e.quantity[1] == e.quantity[2]]
    offdiag = [e for e in diffusion if e.quantity[1] != e.quantity[2]]
    if not truth_known and (acceptance.drift_rel_l2 is not None or acceptance.diffusion_rel_l2 is not None):
        logger.warning("真の係数が不明なため相対誤差の判定をスキップ")
    if acceptance.drift_rel_l2 is not None and truth_known:
        for e in drift:
            checks.append(_at_most(f"{e.quantity} rel_l2", e.rel_l2, acceptance.drift_rel_l2))
    if acceptance.diffusion_rel_l2 is not None and truth_known:
        for e in diagonal:
            checks.append(_at_most(f"{e.quantity} rel_l2", e.rel_l2, acceptance.diffusion_rel_l2))
    if acceptance.diffusion_abs_max is not None:
        # bounded on every grid point, not only the interior
        values = [e.max_abs_all if e.max_abs_all is not None else e.max_abs_estimate for e in diffusion]
        values = [v for v in values if v is not None]
        checks.append(_at_most("max |a|", max(values) if values else None, acceptance.diffusion_abs_max))
    if acceptance.offdiag_abs_max is not None and offdiag:
        values = [e.max_abs_estimate for e in offdiag if e.max_abs_estimate is not None]
        checks.append(_at_most("max |a_offdiag|", max(values) if values else None, acceptance.offdiag_abs_max))
    return checks


def build_report(config: RunConfig, root: Path) -> RunReport:
    """
    Assemble the RunReport from the extraction directory and the stage manifests

    Raises:
        MissingInputError: no extraction result to report on
    """
    extraction_dir = root / "extraction"
    if not (extraction_dir / RESULT_FILE).is_file():
        raise MissingInputError(f"nothing to report: no {RESULT_FILE} in {extraction_dir}")
    payload = read_json(extraction_dir / RESULT_FILE)
    tables = load_report_tables(extraction_dir, config.grid.resolution, config.grid.ranges, config.interior_margin())
    norms = error_norms(tables)
    jump = payload.get("jump")

    stage_seconds = {}
    for stage in STAGES[:-1]:
        manifest = read_manifest(root / stage)
        if manifest is not None:
            stage_seconds[stage] = manifest.elapsed_seconds
    artifacts = {}
    for stage in STAGES[:-1]:
        if (root / stage).is_dir():
            artifacts.update({f"{stage}/{k}": v for k, v in artifact_inventory(root / stage).items()})

    return RunReport(
        experiment=config.experiment,
        jump=jump,
        errors=norms,
        acceptance=acceptance_checks(config, jump, norms, tables.truth_known),
        stage_seconds=stage_seconds,
        artifacts=artifacts,
        n_points=len(tables.grid),
        n_interior=int(tables.interior.sum()),
        failed_points=sorted(int(k) for k in payload.get("failed", {})),
        clamped_points=list(payload.get("clamped", [])),
        truth_known=tables.truth_known,
        reference=dict(config.acceptance.reference),
        tables=tables,
    )

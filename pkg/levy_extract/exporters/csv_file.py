"""
CSVファイル出力エクスポーター (drift.csv / diffusion.csv / training_curve.csv / errors.csv)
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .base import DataExporterBase
from ..core.expressions import CompiledSde
from ..core.fileio import FLOAT_FORMAT, atomic_write_text, write_table
from ..models.extraction import ExtractionResult, FieldEstimate
from ..models.report import RunReport

logger = logging.getLogger(__name__)

DRIFT_FILE = "drift.csv"
DIFFUSION_FILE = "diffusion.csv"
TRAINING_CURVE_FILE = "training_curve.csv"


def upper_pairs(n: int) -> List[Tuple[int, int]]:
    """(i, j) with i <= j; the diffusion matrix is symmetric"""
    return [(i, j) for i in range(n) for j in range(i, n)]


def field_tables(fields: FieldEstimate, truth: Optional[CompiledSde] = None) -> Dict[str, Tuple[List[str], np.ndarray]]:
    """
    Column layout of the two field tables

    drift.csv:     z1..zn, b1_hat..bn_hat, [b1_true..bn_true], failed
    diffusion.csv: z1..zn, aij_hat (i <= j), [aij_true], clamped
    """
    grid = fields.grid
    g, n = grid.shape
    z_cols = [f"z{i + 1}" for i in range(n)]
    pairs = upper_pairs(n)
    failed = np.zeros(g)
    failed[list(fields.failed)] = 1.0
    clamped = np.zeros(g)
    clamped[fields.clamped] = 1.0

    drift_cols = z_cols + [f"b{i + 1}_hat" for i in range(n)]
    drift_vals = [grid, fields.drift]
    diff_cols = z_cols + [f"a{i + 1}{j + 1}_hat" for i, j in pairs]
    diff_vals = [grid, np.stack([fields.diffusion[:, i, j] for i, j in pairs], axis=1)]
    if truth is not None:
        true_a = truth.diffusion(grid)
        drift_cols += [f"b{i + 1}_true" for i in range(n)]
        drift_vals.append(truth.drift(grid))
        diff_cols += [f"a{i + 1}{j + 1}_true" for i, j in pairs]
        diff_vals.append(np.stack([true_a[:, i, j] for i, j in pairs], axis=1))
    drift_cols.append("failed")
    drift_vals.append(failed[:, None])
    diff_cols.append("clamped")
    diff_vals.append(clamped[:, None])
    return {
        DRIFT_FILE: (drift_cols, np.hstack(drift_vals)),
        DIFFUSION_FILE: (diff_cols, np.hstack(diff_vals)),
    }


def write_training_curve(path: Path, history: Sequence[dict]) -> Path:
    """epoch,train_nll,val_nll per epoch"""
    values = np.array([[h["epoch"], h["train_nll"], h["val_nll"]] for h in history], dtype=float)
    return write_table(path, ["epoch", "train_nll", "val_nll"], values.reshape(-1, 3))


class CsvFileExporter(DataExporterBase):
    """抽出結果のドリフト・拡散係数をCSVファイルに出力するエクスポーター"""

    def __init__(self, directory: str, truth: Optional[CompiledSde] = None):
        """
        CSVファイルエクスポーターを初期化

        Args:
            directory: 出力ディレクトリ
            truth: 真の係数（既知の場合は *_true 列を追加）
        """
        self.directory = Path(directory)
        self.truth = truth

    async def export(self, data: ExtractionResult) -> bool:
        """
        drift.csv / diffusion.csv を出力

        Args:
            data: 抽出結果

        Returns:
            エクスポートが成功した場合True
        """
        try:
            for name, (columns, values) in field_tables(data.fields, self.truth).items():
                write_table(self.directory / name, columns, values)
            logger.info(f"CSVファイルに{len(data.fields.grid)}点の推定値を出力: {self.directory}")
            return True
        except (IOError, OSError) as e:
            logger.error(f"CSVファイル出力エラー: {e}")
            raise


def write_error_table(path: Path, report: RunReport) -> Path:
    """quantity,n_points,rel_l2,max_abs_error,max_abs_estimate (nan where undefined)"""
    lines = ["quantity,n_points,rel_l2,max_abs_error,max_abs_estimate"]
    for quantity, count, *values in report.error_table():
        cells = [FLOAT_FORMAT % (np.nan if v is None else v) for v in values]
        lines.append(",".join([quantity, str(count)] + cells))
    return atomic_write_text(path, "\n".join(lines) + "\n")

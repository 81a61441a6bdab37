"""
SVGプロット出力エクスポーター
"""
import io
import logging
from pathlib import Path
from typing import Dict, List, Optional

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .base import DataExporterBase
from .csv_file import upper_pairs
from ..core.fileio import atomic_write_text
from ..core.kramers_moyal import theoretical_annulus_rate
from ..models.report import ReportTables, RunReport

logger = logging.getLogger(__name__)

TRUE_COLOR = "tab:blue"
LEARNED_COLOR = "tab:red"
DIVERGING_CMAP = "RdBu_r"
SVG_RC = {"svg.hashsalt": "levy-extract", "svg.fonttype": "none"}


def save_svg(figure: Figure, path: Path) -> Path:
    """Deterministic SVG: fixed hash salt and no timestamp"""
    buffer = io.StringIO()
    with matplotlib.rc_context(SVG_RC):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return atomic_write_text(path, buffer.getvalue())


def _overlay(axis, z, learned, truth, label):
    if truth is not None:
        axis.plot(z, truth, color=TRUE_COLOR, label=f"true {label}")
    axis.plot(z, learned, color=LEARNED_COLOR, label=f"learned {label}", marker=".")
    axis.set_xlabel("z")
    axis.set_ylabel(label)
    axis.grid(True)
    axis.legend()


def field_overlay_1d(tables: ReportTables) -> Figure:
    """Drift and diffusion against z, true in blue and learned in red"""
    z = tables.grid[:, 0]
    figure = Figure(figsize=(10, 4))
    left, right = figure.subplots(1, 2)
    _overlay(left, z, tables.drift_hat[:, 0], None if tables.drift_true is None else tables.drift_true[:, 0], "b(z)")
    _overlay(right, z, tables.diffusion_hat[:, 0, 0],
             None if tables.diffusion_true is None else tables.diffusion_true[:, 0, 0], "a(z)")
    figure.tight_layout()
    return figure


def _heatmap_grid(tables: ReportTables, learned: List[np.ndarray], truth: Optional[List[np.ndarray]],
                  labels: List[str]) -> Figure:
    """True top row, learned bottom row, one shared symmetric scale per column"""
    x_axis = tables.grid[:, 0].reshape(tables.resolution)[:, 0]
    y_axis = tables.grid[:, 1].reshape(tables.resolution)[0, :]
    rows = 2 if truth is not None else 1
    figure = Figure(figsize=(4.2 * len(labels), 3.6 * rows))
    axes = np.atleast_2d(figure.subplots(rows, len(labels), squeeze=False))
    for col, label in enumerate(labels):
        panels = ([("true", truth[col])] if truth is not None else []) + [("learned", learned[col])]
        finite = [np.abs(v[np.isfinite(v)]) for _, v in panels]
        scale = max([float(f.max()) for f in finite if f.size] + [1e-12])
        for row, (kind, values) in enumerate(panels):
            axis = axes[row, col]
            mesh = axis.pcolormesh(x_axis, y_axis, values.reshape(tables.resolution).T, shading="nearest",
                                   cmap=DIVERGING_CMAP, vmin=-scale, vmax=scale)
            axis.set_title(f"{kind} {label}")
            axis.set_xlabel("z1")
            axis.set_ylabel("z2")
            figure.colorbar(mesh, ax=axis)
    figure.tight_layout()
    return figure


def drift_heatmaps(tables: ReportTables) -> Figure:
    labels = [f"b{i + 1}" for i in range(tables.dim)]
    learned = [tables.drift_hat[:, i] for i in range(tables.dim)]
    truth = None if tables.drift_true is None else [tables.drift_true[:, i] for i in range(tables.dim)]
    return _heatmap_grid(tables, learned, truth, labels)


def diffusion_heatmaps(tables: ReportTables) -> Figure:
    pairs = upper_pairs(tables.dim)
    labels = [f"a{i + 1}{j + 1}" for i, j in pairs]
    learned = [tables.diffusion_hat[:, i, j] for i, j in pairs]
    truth = None if tables.diffusion_true is None else [tables.diffusion_true[:, i, j] for i, j in pairs]
    return _heatmap_grid(tables, learned, truth, labels)


def jump_fit_plot(jump: Dict) -> Figure:
    """Pooled annulus rates on log-log axes with the fitted line of slope -alpha_hat"""
    eps = np.asarray(jump["epsilons"], dtype=float)
    rates = np.asarray(jump["pooled_rates"], dtype=float)
    fine = np.geomspace(eps.min(), eps.max(), 50)
    fitted = [theoretical_annulus_rate(jump["alpha_hat"], jump["sigma_hat"], jump["dim"], e, jump["m"]) for e in fine]
    figure = Figure(figsize=(5, 4))
    axis = figure.subplots()
    axis.loglog(eps, rates, "o", color=LEARNED_COLOR, label=f"pooled rates ({jump.get('source', 'flow')})")
    axis.loglog(fine, fitted, color=TRUE_COLOR,
                label=f"fit: alpha={jump['alpha_hat']:.3f}, sigma={jump['sigma_hat']:.3f}")
    axis.set_xlabel("eps")
    axis.set_ylabel("annulus rate")
    axis.grid(True, which="both")
    axis.legend()
    figure.tight_layout()
    return figure


class SvgPlotExporter(DataExporterBase):
    """RunReport の表データからSVGプロットを出力するエクスポーター"""

    def __init__(self, directory: str):
        """
        Args:
            directory: 出力ディレクトリ
        """
        self.directory = Path(directory)
        self.written: List[Path] = []

    def figures(self, report: RunReport) -> Dict[str, Figure]:
        figures = {}
        tables = report.tables
        if tables is not None:
            if tables.dim == 1:
                figures["fields.svg"] = field_overlay_1d(tables)
            else:
                figures["drift_heatmaps.svg"] = drift_heatmaps(tables)
                figures["diffusion_heatmaps.svg"] = diffusion_heatmaps(tables)
        if report.jump:
            figures["jump_fit.svg"] = jump_fit_plot(report.jump)
        return figures

    async def export(self, data: RunReport) -> bool:
        """
        プロットをSVGファイルに出力

        Args:
            data: RunReport（tables 付き）

        Returns:
            エクスポートが成功した場合True
        """
        try:
            self.written = [save_svg(figure, self.directory / name) for name, figure in self.figures(data).items()]
            logger.info(f"SVGプロットを{len(self.written)}件出力: {self.directory}")
            return True
        except (IOError, OSError) as e:
            logger.error(f"SVG出力エラー: {e}")
            raise

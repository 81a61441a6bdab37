"""
コンソール出力エクスポーター
"""
import logging
from typing import List, Union

from .base import DataExporterBase
from ..models.extraction import ExtractionResult
from ..models.report import RunReport

logger = logging.getLogger(__name__)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


class ConsoleExporter(DataExporterBase):
    """コンソールに結果を出力するエクスポーター"""

    def __init__(self, verbose: bool = False):
        """
        コンソールエクスポーターを初期化

        Args:
            verbose: 詳細モードフラグ（成果物一覧も表示）
        """
        self.verbose = verbose

    def format_report(self, report: RunReport) -> str:
        """RunReport を表形式の文字列に整形"""
        lines = [f"=== {report.experiment} ==="]
        if report.jump:
            line = f"alpha_hat={report.jump['alpha_hat']:.4f}, sigma_hat={report.jump['sigma_hat']:.4f}"
            if report.reference:
                line += " (reference: " + ", ".join(f"{k}={v}" for k, v in sorted(report.reference.items())) + ")"
            lines.append(line)
        else:
            lines.append("jump parameters: not fitted")
        lines.append(f"grid points: {report.n_points} ({report.n_interior} interior), "
                     f"failed: {len(report.failed_points)}, clamped: {len(report.clamped_points)}")
        if report.errors:
            lines.append(f"{'quantity':<10}{'points':>8}{'rel_l2':>12}{'max_err':>12}{'max_abs':>12}")
            for row in report.error_table():
                lines.append(f"{row[0]:<10}{row[1]:>8}" + "".join(f"{_fmt(v):>12}" for v in row[2:]))
        for check in report.acceptance:
            mark = "PASS" if check.passed else "FAIL"
            lines.append(f"[{mark}] {check.criterion}: {_fmt(check.value)} (bound {check.bound})")
        if report.stage_seconds:
            lines.append("stage seconds: " + ", ".join(f"{k}={v:.1f}" for k, v in report.stage_seconds.items()))
        if self.verbose:
            for name, digest in report.artifacts.items():
                lines.append(f"  {name}  {digest[:12]}")
        return "\n".join(lines)

    def format_data(self, data: Union[RunReport, ExtractionResult]) -> str:
        if isinstance(data, RunReport):
            return self.format_report(data)
        return data.summary()

    async def export(self, data: Union[RunReport, ExtractionResult, List]) -> bool:
        """
        結果をコンソールに出力

        Returns:
            常にTrue（コンソール出力は基本的に失敗しない）
        """
        try:
            data_list = data if isinstance(data, list) else [data]
            for item in data_list:
                formatted_output = self.format_data(item)
                print(formatted_output)
                logger.debug(f"コンソール出力: {formatted_output}")
            return True
        except Exception as e:
            logger.error(f"コンソール出力エラー: {e}")
            return False

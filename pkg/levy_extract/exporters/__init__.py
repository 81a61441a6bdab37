"""
データエクスポーターパッケージ
"""
from .base import DataExporterBase
from .console import ConsoleExporter
from .csv_file import CsvFileExporter
from .json_file import JsonFileExporter
from .svg_plots import SvgPlotExporter

__all__ = [
    "DataExporterBase",
    "ConsoleExporter",
    "CsvFileExporter",
    "JsonFileExporter",
    "SvgPlotExporter",
]

"""
JSONファイル出力エクスポーター
"""
import logging
from typing import Any, Union

from .base import DataExporterBase
from ..models.base import RecordBase
from ..core.fileio import write_json

logger = logging.getLogger(__name__)


class JsonFileExporter(DataExporterBase):
    """レコードをキー順ソート済みのJSONファイルに出力するエクスポーター"""

    def __init__(self, file_path: str):
        """
        JSONファイルエクスポーターを初期化

        Args:
            file_path: 出力ファイルのパス（一時ファイル経由で置き換える）
        """
        self.file_path = file_path

    async def export(self, data: Union[RecordBase, Any]) -> bool:
        """
        レコードをJSONファイルに出力

        Args:
            data: to_dict() を持つレコード、またはJSON化可能な値

        Returns:
            エクスポートが成功した場合True
        """
        try:
            payload = data.to_dict() if hasattr(data, "to_dict") else data
            write_json(self.file_path, payload)
            logger.info(f"JSONファイルに出力: {self.file_path}")
            return True
        except (IOError, OSError) as e:
            logger.error(f"JSONファイル出力エラー: {e}")
            raise
        except Exception as e:
            logger.error(f"予期しないエラー: {e}")
            return False

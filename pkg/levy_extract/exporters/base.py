"""
データエクスポーター基底クラス
"""
from abc import ABC, abstractmethod
from typing import Any


class DataExporterBase(ABC):
    """結果レコードを出力するエクスポーターの抽象基底クラス"""

    @abstractmethod
    async def export(self, data: Any) -> bool:
        """
        レコードをエクスポートする

        Args:
            data: ExtractionResult / RunReport などの結果レコード

        Returns:
            エクスポートが成功した場合True、失敗した場合False
        """
        pass

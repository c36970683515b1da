"""
数据摄入引擎
统一管理多源语料摄入 (HybridQA JSON, WTQ TSV)
"""

from pathlib import Path
from typing import List, Union, Optional
import logging

from .hybrid_reader import HybridCorpusReader
from .wtq_reader import WTQReader
from ..models.data_schema import HybridCorpus

logger = logging.getLogger(__name__)


class DataIngestionEngine:
    """
    数据摄入引擎
    支持多种语料格式的统一摄入, 输出统一的HybridCorpus
    """

    def __init__(self):
        self.data_sources = []

    def add_hybrid_source(
        self,
        file_path: Union[str, Path],
        require_answers: bool = True
    ) -> 'DataIngestionEngine':
        """
        添加HybridQA格式语料

        Args:
            file_path: 语料JSON路径
            require_answers: 是否要求答案非空

        Returns:
            self (支持链式调用)
        """
        self.data_sources.append({
            'type': 'hybrid',
            'path': Path(file_path),
            'require_answers': require_answers
        })
        return self

    def add_wtq_source(self, file_path: Union[str, Path]) -> 'DataIngestionEngine':
        """添加WTQ问题文件 (无链接段落)"""
        self.data_sources.append({
            'type': 'wtq',
            'path': Path(file_path)
        })
        return self

    def add_source(self, file_path: Union[str, Path], fmt: str = 'auto') -> 'DataIngestionEngine':
        """按格式名或文件后缀添加数据源"""
        path = Path(file_path)
        if fmt == 'auto':
            fmt = 'wtq' if path.suffix in ('.tsv', '.examples') else 'hybrid'
        if fmt == 'hybrid':
            return self.add_hybrid_source(path)
        if fmt == 'wtq':
            return self.add_wtq_source(path)
        raise ValueError(f"Unsupported corpus format: {fmt}")

    def ingest(self) -> List[HybridCorpus]:
        """
        执行数据摄入

        Returns:
            HybridCorpus对象列表

        Raises:
            ValueError: 如果没有配置数据源或数据源类型不支持
        """
        if not self.data_sources:
            raise ValueError("No data sources configured")

        results = []

        for source in self.data_sources:
            if source['type'] == 'hybrid':
                reader = HybridCorpusReader(source['path'], require_answers=source['require_answers'])
                results.append(reader.parse_all())
            elif source['type'] == 'wtq':
                tables, examples = WTQReader(source['path']).parse_all()
                results.append(HybridCorpus(
                    tables={t.table_id: t for t in tables},
                    passages={},
                    examples=examples
                ))
            else:
                raise ValueError(f"Unsupported data source type: {source['type']}")

        logger.info(f"Ingested data from {len(results)} sources")
        return results

    def ingest_first(self) -> Optional[HybridCorpus]:
        """
        仅返回第一个数据源

        Returns:
            HybridCorpus对象或None
        """
        results = self.ingest()
        return results[0] if results else None

"""
HybridQA语料读取器
读取统一格式的语料JSON (表格 + 段落 + 样本) 并解析为数据模型
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from ..evaluation.metrics import normalize_answer
from ..models.data_schema import (
    AnswerSource,
    HybridCorpus,
    Passage,
    QAExample,
    Table
)
from ..validation.errors import CorpusParseError, CorpusValidationError

logger = logging.getLogger(__name__)


class HybridCorpusReader:
    """
    语料JSON读取器

    格式:
        {"tables": [{"id", "headers", "rows", "links"}],
         "passages": {"pid": {"title", "sentences"}},
         "examples": [{"qid", "table_id", "question", "answer", "source", "gold_cell"}]}
    """

    REQUIRED_KEYS = ('tables', 'passages', 'examples')

    def __init__(self, file_path: Union[str, Path], require_answers: bool = True):
        """
        初始化读取器

        Args:
            file_path: 语料JSON路径
            require_answers: 是否要求每个样本都有答案 (train/dev为True, test为False)
        """
        self.file_path = Path(file_path)
        if not self.file_path.exists():
            raise FileNotFoundError(f"Corpus file not found: {file_path}")

        self.require_answers = require_answers
        self.raw: Dict[str, Any] = {}
        self.dropped_links = 0
        self.relabeled_examples = 0

    def _load_json(self):
        """加载JSON文件"""
        try:
            with open(self.file_path, 'r', encoding='utf-8') as f:
                self.raw = json.load(f)
        except json.JSONDecodeError as e:
            raise CorpusParseError(f"invalid JSON: {e}", file=str(self.file_path))

        if not isinstance(self.raw, dict):
            raise CorpusParseError("top level must be an object", file=str(self.file_path))

        missing = [key for key in self.REQUIRED_KEYS if key not in self.raw]
        if missing:
            raise CorpusParseError(f"missing keys {missing}", file=str(self.file_path))

    def parse_passages(self) -> Dict[str, Passage]:
        """
        解析段落

        Returns:
            passage_id -> Passage
        """
        passages: Dict[str, Passage] = {}
        raw_passages = self.raw['passages']
        if not isinstance(raw_passages, dict):
            raise CorpusParseError("'passages' must be an object", file=str(self.file_path))

        for pid, record in raw_passages.items():
            try:
                sentences = record['sentences']
                if not isinstance(sentences, list):
                    raise CorpusParseError(
                        f"'sentences' must be a list, got {type(sentences).__name__}",
                        file=str(self.file_path),
                        record=pid
                    )
                passages[pid] = Passage(passage_id=pid, title=record.get('title', ''), sentences=sentences)
            except (KeyError, TypeError, AttributeError) as e:
                raise CorpusParseError(f"malformed passage: {e}", file=str(self.file_path), record=pid)
            except ValidationError as e:
                raise CorpusValidationError(str(e), record_id=pid)

        logger.info(f"Parsed {len(passages)} passages")
        return passages

    def _resolve_links(
        self,
        table_id: str,
        links: Optional[List[List[List[str]]]],
        passages: Dict[str, Passage]
    ) -> Optional[List[List[List[str]]]]:
        """丢弃悬空链接 (段落不存在) 并记录警告"""
        if links is None:
            return None

        resolved = []
        for i, row in enumerate(links):
            resolved_row = []
            for j, cell_links in enumerate(row):
                kept = []
                for pid in cell_links or []:
                    if pid in passages:
                        kept.append(pid)
                    else:
                        self.dropped_links += 1
                        logger.warning(f"Dropping dangling link {pid} in table {table_id} cell ({i}, {j})")
                resolved_row.append(kept)
            resolved.append(resolved_row)
        return resolved

    def parse_tables(self, passages: Dict[str, Passage]) -> Dict[str, Table]:
        """
        解析表格

        Args:
            passages: 已解析的段落, 用于校验单元格链接

        Returns:
            table_id -> Table (保持文件顺序)
        """
        tables: Dict[str, Table] = {}
        for index, record in enumerate(self.raw['tables']):
            table_id = record.get('id') if isinstance(record, dict) else None
            if not table_id:
                raise CorpusParseError("table without id", file=str(self.file_path), record=f"tables[{index}]")

            try:
                headers = [str(h) for h in record['headers']]
                texts = [[str(text) for text in row] for row in record['rows']]
                links = record.get('links')
            except (KeyError, TypeError) as e:
                raise CorpusParseError(f"malformed table: {e}", file=str(self.file_path), record=table_id)

            # 先检查形状, 给出带table_id的错误
            for i, row in enumerate(texts):
                if len(row) != len(headers):
                    raise CorpusValidationError(
                        f"row {i} has {len(row)} cells under {len(headers)} headers",
                        record_id=table_id
                    )

            try:
                table = Table.from_matrix(
                    table_id,
                    headers,
                    texts,
                    self._resolve_links(table_id, links, passages)
                )
            except ValidationError as e:
                raise CorpusValidationError(str(e), record_id=table_id)

            if table_id in tables:
                raise CorpusValidationError("duplicate table id", record_id=table_id)
            tables[table_id] = table

        logger.info(f"Parsed {len(tables)} tables")
        return tables

    def parse_examples(self, tables: Dict[str, Table]) -> List[QAExample]:
        """
        解析问答样本

        Args:
            tables: 已解析的表格

        Returns:
            QAExample列表 (保持文件顺序)
        """
        examples = []
        seen = set()
        for index, record in enumerate(self.raw['examples']):
            qid = record.get('qid') if isinstance(record, dict) else None
            if not qid:
                raise CorpusParseError("example without qid", file=str(self.file_path), record=f"examples[{index}]")
            if qid in seen:
                raise CorpusValidationError("duplicate question id", record_id=qid)
            seen.add(qid)

            try:
                table_id = record['table_id']
                question = record['question']
                answer = record.get('answer') or ''
                source = AnswerSource(record.get('source') or AnswerSource.UNKNOWN.value)
                gold = record.get('gold_cell')
            except (KeyError, ValueError, TypeError) as e:
                raise CorpusParseError(f"malformed example: {e}", file=str(self.file_path), record=qid)

            if table_id not in tables:
                raise CorpusValidationError(f"unknown table {table_id}", record_id=qid)
            if self.require_answers and not str(answer).strip():
                raise CorpusValidationError("empty answer", record_id=qid)

            gold_cell = None
            if gold is not None:
                table = tables[table_id]
                try:
                    row, col = int(gold[0]), int(gold[1])
                except (TypeError, ValueError, IndexError):
                    raise CorpusParseError(f"malformed gold_cell {gold}", file=str(self.file_path), record=qid)
                if not (0 <= row < table.n_rows and 0 <= col < table.n_cols):
                    raise CorpusValidationError(f"gold cell ({row}, {col}) out of range", record_id=qid)
                gold_cell = (row, col)

            # in_table的金标单元格必须包含答案, 否则来源改为unknown
            if source == AnswerSource.IN_TABLE and gold_cell is not None:
                cell_text = normalize_answer(tables[table_id].cell(*gold_cell).text)
                if normalize_answer(str(answer)) not in cell_text:
                    logger.debug(f"{qid}: gold cell {gold_cell} does not contain the answer, source set to unknown")
                    source = AnswerSource.UNKNOWN
                    self.relabeled_examples += 1

            examples.append(QAExample(
                question_id=qid,
                table_id=table_id,
                question=str(question),
                answer_text=str(answer),
                gold_cell=gold_cell,
                source=source
            ))

        logger.info(f"Parsed {len(examples)} examples")
        return examples

    def parse_all(self) -> HybridCorpus:
        """
        解析整个语料文件

        Returns:
            HybridCorpus对象
        """
        logger.info(f"Loading hybrid corpus from {self.file_path}")
        self._load_json()

        passages = self.parse_passages()
        tables = self.parse_tables(passages)
        examples = self.parse_examples(tables)

        if self.dropped_links:
            logger.warning(f"Dropped {self.dropped_links} dangling passage links")
        if self.relabeled_examples:
            logger.warning(f"Relabeled {self.relabeled_examples} in_table examples whose gold cell lacks the answer")

        return HybridCorpus(tables=tables, passages=passages, examples=examples)


def load_hybrid_corpus(
    path: Union[str, Path],
    require_answers: bool = True
) -> Tuple[List[Table], Dict[str, Passage], List[QAExample]]:
    """
    便捷函数: 读取HybridQA格式语料

    Args:
        path: 语料JSON路径
        require_answers: 是否要求答案非空

    Returns:
        (表格列表, 段落字典, 样本列表)
    """
    corpus = HybridCorpusReader(path, require_answers=require_answers).parse_all()
    return corpus.table_list, dict(corpus.passages), list(corpus.examples)

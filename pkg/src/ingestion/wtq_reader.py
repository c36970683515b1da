"""
WikiTableQuestions读取器
读取TSV问题文件和CSV表格文件, 没有链接段落
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from ..evaluation.metrics import normalize_answer
from ..models.data_schema import AnswerSource, QAExample, Table
from ..validation.errors import CorpusParseError, CorpusValidationError

logger = logging.getLogger(__name__)


class WTQReader:
    """
    WTQ读取器

    问题文件格式: id \\t question \\t table-file \\t answer
    表格文件路径相对于问题文件所在目录 (或其上级目录) 解析
    """

    COLUMNS = ['id', 'question', 'table_file', 'answer']

    def __init__(self, file_path: Union[str, Path]):
        """
        初始化WTQ读取器

        Args:
            file_path: 问题TSV路径
        """
        self.file_path = Path(file_path)
        if not self.file_path.exists():
            raise FileNotFoundError(f"WTQ question file not found: {file_path}")

        self.tables: Dict[str, Table] = {}

    def _read_questions(self) -> pd.DataFrame:
        """读取问题TSV"""
        try:
            df = pd.read_csv(
                self.file_path,
                sep='\t',
                header=None,
                dtype=str,
                keep_default_na=False,
                quoting=3  # csv.QUOTE_NONE
            )
        except pd.errors.EmptyDataError:
            return pd.DataFrame(columns=self.COLUMNS)
        except Exception as e:
            raise CorpusParseError(f"failed to read TSV: {e}", file=str(self.file_path))

        if len(df.columns) < 4:
            raise CorpusParseError(
                f"expected 4 columns, found {len(df.columns)}",
                file=str(self.file_path)
            )
        df = df.iloc[:, :4]
        df.columns = self.COLUMNS

        # 兼容带表头(id, utterance, context, targetValue)的文件
        if len(df) and df.iloc[0]['id'].strip().lower() == 'id':
            df = df.iloc[1:].reset_index(drop=True)

        logger.info(f"Read {len(df)} WTQ questions from {self.file_path}")
        return df

    def _resolve_table_path(self, table_file: str) -> Path:
        for base in (self.file_path.parent, self.file_path.parent.parent):
            candidate = base / table_file
            if candidate.exists():
                return candidate
        raise CorpusValidationError(f"table file not found: {table_file}", record_id=table_file)

    def read_table(self, table_file: str) -> Table:
        """
        读取 (并缓存) 一个表格文件

        Args:
            table_file: 问题文件中的表格路径

        Returns:
            Table对象
        """
        if table_file in self.tables:
            return self.tables[table_file]

        path = self._resolve_table_path(table_file)
        sep = '\t' if path.suffix in ('.tsv', '.table') else ','
        try:
            df = pd.read_csv(path, sep=sep, dtype=str, keep_default_na=False)
        except Exception as e:
            raise CorpusParseError(f"failed to read table: {e}", file=str(path))

        headers = []
        for j, header in enumerate(df.columns):
            header = str(header).strip()
            if not header or header.startswith('Unnamed:'):
                logger.warning(f"Empty header {j} in {table_file}, using column_{j}")
                header = f"column_{j}"
            headers.append(header)

        texts = df.astype(str).values.tolist()
        try:
            table = Table.from_matrix(table_file, headers, texts)
        except ValidationError as e:
            raise CorpusValidationError(str(e), record_id=table_file)

        self.tables[table_file] = table
        return table

    @staticmethod
    def locate_answer_cell(table: Table, answer: str) -> Optional[Tuple[int, int]]:
        """答案恰好匹配一个单元格时返回其坐标"""
        target = normalize_answer(answer)
        matches = [
            cell.coord for cell in table.iter_cells()
            if normalize_answer(cell.text) == target
        ]
        return matches[0] if len(matches) == 1 else None

    def parse_all(self) -> Tuple[List[Table], List[QAExample]]:
        """
        解析问题文件及其引用的所有表格

        Returns:
            (表格列表, 样本列表)
        """
        df = self._read_questions()
        examples = []
        located = 0

        for _, row in df.iterrows():
            qid = str(row['id']).strip()
            answer = str(row['answer']).strip()
            if not qid:
                raise CorpusParseError("question without id", file=str(self.file_path))
            if not answer:
                raise CorpusValidationError("empty answer", record_id=qid)

            table = self.read_table(str(row['table_file']).strip())
            gold_cell = self.locate_answer_cell(table, answer)
            located += gold_cell is not None

            examples.append(QAExample(
                question_id=qid,
                table_id=table.table_id,
                question=str(row['question']),
                answer_text=answer,
                gold_cell=gold_cell,
                source=AnswerSource.IN_TABLE
            ))

        logger.info(
            f"Parsed {len(examples)} WTQ examples over {len(self.tables)} tables "
            f"({located} with a unique answer cell)"
        )
        return list(self.tables.values()), examples


def load_wtq_corpus(path: Union[str, Path]) -> Tuple[List[Table], List[QAExample]]:
    """
    便捷函数: 读取WTQ问题文件

    Args:
        path: 问题TSV路径

    Returns:
        (表格列表, 样本列表)
    """
    return WTQReader(path).parse_all()

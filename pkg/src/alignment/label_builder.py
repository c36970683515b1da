"""
对齐标签生成
合并列名链接、值链接、金标列和桥接列, 生成弱监督对齐标签
"""

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Tuple, Union

import pandas as pd

from .schema_linking import bridge_at, find_bridge_cells, name_based_links, value_based_links
from ..models.data_schema import (
    AlignmentLabels,
    AnswerSource,
    BridgeCandidate,
    BridgeMatch,
    HybridCorpus,
    LinkSource,
    Passage,
    QAExample,
    Table
)
from ..validation.errors import CorpusParseError, CorpusValidationError

logger = logging.getLogger(__name__)


def make_alignment_labels(
    example: QAExample,
    table: Table,
    bridge: Optional[BridgeCandidate] = None
) -> AlignmentLabels:
    """
    生成一个样本的对齐标签

    labels = 列名链接 ∪ 值链接 ∪ 金标列 ∪ 桥接列

    Args:
        example: 问答样本
        table: 样本引用的表格
        bridge: 可选的桥接实体

    Returns:
        AlignmentLabels对象
    """
    if example.table_id != table.table_id:
        raise ValueError(f"Example {example.question_id} references {example.table_id}, got {table.table_id}")

    provenance: List[List[LinkSource]] = [[] for _ in range(table.n_cols)]

    for j in sorted(name_based_links(example.question, table.headers)):
        provenance[j].append(LinkSource.NAME_LINK)
    for j in sorted(value_based_links(example.question, table)):
        provenance[j].append(LinkSource.VALUE_LINK)
    if example.gold_cell is not None:
        provenance[example.gold_cell[1]].append(LinkSource.GOLD_CELL_COLUMN)
    if bridge is not None:
        provenance[bridge.cell[1]].append(LinkSource.BRIDGE_COLUMN)

    return AlignmentLabels(
        table_id=table.table_id,
        question_id=example.question_id,
        labels=[1 if sources else 0 for sources in provenance],
        provenance=provenance
    )


def build_alignment_dataset(corpus: HybridCorpus) -> List[AlignmentLabels]:
    """
    为语料中所有样本生成对齐标签

    桥接实体取位于金标单元格的桥接候选 (in_passage问题的金标单元格就是桥接实体)

    Args:
        corpus: 语料

    Returns:
        与corpus.examples顺序一致的标签列表
    """
    bridges: Dict[str, List[BridgeCandidate]] = {}
    labels = []
    for example in corpus.examples:
        table = corpus.table_for(example)
        if table.table_id not in bridges:
            bridges[table.table_id] = find_bridge_cells(table, corpus.passages)
        bridge = bridge_at(bridges[table.table_id], example.gold_cell)
        labels.append(make_alignment_labels(example, table, bridge))

    logger.info(f"Built alignment labels for {len(labels)} examples")
    return labels


def label_coverage(labels: List[AlignmentLabels]) -> pd.DataFrame:
    """
    弱监督覆盖统计

    Returns:
        DataFrame, 每种来源一行: 命中样本比例、命中列比例
    """
    n_examples = len(labels)
    n_columns = sum(len(item.labels) for item in labels)
    rows = []
    for source in LinkSource:
        fired_examples = sum(any(source in p for p in item.provenance) for item in labels)
        fired_columns = sum(source in p for item in labels for p in item.provenance)
        rows.append({
            'source': source.value,
            'example_coverage': fired_examples / n_examples if n_examples else 0.0,
            'column_coverage': fired_columns / n_columns if n_columns else 0.0,
        })

    df = pd.DataFrame(rows, columns=['source', 'example_coverage', 'column_coverage'])
    df.attrs['mean_positive_columns'] = (
        sum(sum(item.labels) for item in labels) / n_examples if n_examples else 0.0
    )
    return df


# ========== 外部生成问题的接入 ==========

class QuestionGenerator(Protocol):
    """
    多跳问题生成器接口

    系统不内置生成器; 外部生成的问题通过read_generated_questions接入
    """

    def generate(
        self,
        table: Table,
        passages: Dict[str, Passage]
    ) -> Iterable[Tuple[QAExample, Optional[BridgeCandidate]]]:
        ...


def _check_in_table(table: Table, cell: Tuple[int, int], field: str, record_id: str) -> None:
    row, col = cell
    if not (0 <= row < table.n_rows and 0 <= col < table.n_cols):
        raise CorpusValidationError(
            f"{field} {cell} outside table {table.table_id} of shape ({table.n_rows}, {table.n_cols})",
            record_id=record_id
        )


def read_generated_questions(
    path: Union[str, Path],
    tables: Dict[str, Table]
) -> List[Tuple[QAExample, Optional[BridgeCandidate]]]:
    """
    读取外部生成的问题及桥接实体

    每行: {"qid", "table_id", "question", "answer", "source", "gold_cell",
           "bridge": {"cell": [r, c], "passage_id"}}

    Args:
        path: 逐行JSON文件
        tables: 已加载的表格, 用于校验引用

    Returns:
        (样本, 桥接实体) 列表
    """
    results = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                example = QAExample(
                    question_id=record['qid'],
                    table_id=record['table_id'],
                    question=record['question'],
                    answer_text=record.get('answer', ''),
                    gold_cell=tuple(record['gold_cell']) if record.get('gold_cell') else None,
                    source=AnswerSource(record.get('source', AnswerSource.UNKNOWN.value))
                )
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as e:
                raise CorpusParseError(f"malformed generated question: {e}", file=str(path), record=f"line {line_no}")

            table = tables.get(example.table_id)
            if table is None:
                raise CorpusValidationError(f"unknown table {example.table_id}", record_id=example.question_id)
            if example.gold_cell is not None:
                _check_in_table(table, example.gold_cell, 'gold_cell', example.question_id)

            bridge = None
            raw_bridge = record.get('bridge')
            if raw_bridge:
                try:
                    row, col = (int(value) for value in raw_bridge['cell'])
                    passage_id = raw_bridge['passage_id']
                except (KeyError, ValueError, TypeError) as e:
                    raise CorpusParseError(f"malformed bridge: {e}", file=str(path), record=f"line {line_no}")
                _check_in_table(table, (row, col), 'bridge cell', example.question_id)
                if passage_id not in table.cell(row, col).passage_ids:
                    raise CorpusValidationError(
                        f"bridge passage {passage_id} is not linked from cell ({row}, {col})",
                        record_id=example.question_id
                    )
                bridge = BridgeCandidate(
                    cell=(row, col),
                    passage_id=passage_id,
                    match_kind=BridgeMatch(raw_bridge.get('match_kind', BridgeMatch.TITLE_EXACT.value))
                )
            results.append((example, bridge))

    logger.info(f"Read {len(results)} generated questions from {path}")
    return results

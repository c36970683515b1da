"""
单元格选择错误分析
按预测单元格与金标单元格的几何关系归类
"""

from collections import Counter
from typing import Dict, Mapping, Optional, Sequence

from ..models.data_schema import AnswerSource, CellCoord, ErrorCategory, HybridCorpus, RankedCell


def classify_error(
    pred_cell: CellCoord,
    gold_cell: CellCoord,
    source: Optional[AnswerSource] = None
) -> ErrorCategory:
    """
    错误归类

    Args:
        pred_cell: 预测单元格
        gold_cell: 金标单元格
        source: 金标答案来源; compute来源归为numeric_required

    Returns:
        ErrorCategory
    """
    if source == AnswerSource.COMPUTE:
        return ErrorCategory.NUMERIC_REQUIRED

    pred_row, pred_col = pred_cell
    gold_row, gold_col = gold_cell
    if (pred_row, pred_col) == (gold_row, gold_col):
        return ErrorCategory.CORRECT
    if pred_col == gold_col:
        return ErrorCategory.SAME_COL_WRONG_ROW
    if pred_row == gold_row:
        return ErrorCategory.SAME_ROW_WRONG_COL
    return ErrorCategory.BOTH_WRONG


def error_breakdown(
    rankings: Mapping[str, Sequence[RankedCell]],
    corpus: HybridCorpus
) -> Dict[str, int]:
    """
    top-1单元格的错误类别计数

    Args:
        rankings: question_id -> 单元格排序
        corpus: 带金标单元格的语料

    Returns:
        {类别: 数量}, 包含所有类别
    """
    counts: Counter = Counter()
    for example in corpus.examples:
        ranking = rankings.get(example.question_id)
        if example.gold_cell is None or not ranking:
            continue
        counts[classify_error(ranking[0].coord, example.gold_cell, example.source).value] += 1
    return {category.value: counts.get(category.value, 0) for category in ErrorCategory}

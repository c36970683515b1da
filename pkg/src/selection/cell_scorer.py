"""
单元格打分
单元格分数 = 行概率 + 列概率, 只需N+M次分类即可给N·M个单元格排序
"""

import logging
from typing import List, Sequence

import numpy as np

from ..models.data_schema import CellScoreSheet, RankedCell

logger = logging.getLogger(__name__)


def combine_scores(row_probs: Sequence[float], col_probs: Sequence[float]) -> CellScoreSheet:
    """
    合并行/列概率

    Args:
        row_probs: N个行概率
        col_probs: M个列概率

    Returns:
        CellScoreSheet, ranking按分数降序, 同分按行优先顺序
    """
    rows = np.asarray(row_probs, dtype=np.float64)
    cols = np.asarray(col_probs, dtype=np.float64)
    if rows.size == 0 or cols.size == 0:
        raise ValueError("row and column probabilities must be non-empty")
    if not (np.isfinite(rows).all() and np.isfinite(cols).all()):
        raise ValueError("row and column probabilities must be finite")

    scores = rows[:, None] + cols[None, :]
    row_index, col_index = np.indices(scores.shape)
    flat_scores = scores.ravel()
    order = np.lexsort((col_index.ravel(), row_index.ravel(), -flat_scores))

    n_cols = cols.size
    ranking = [
        RankedCell(row=int(k // n_cols), col=int(k % n_cols), score=float(flat_scores[k]))
        for k in order
    ]
    return CellScoreSheet(
        row_probs=rows.tolist(),
        col_probs=cols.tolist(),
        cell_scores=scores.tolist(),
        ranking=ranking
    )


def topk_cells(sheet: CellScoreSheet, k: int) -> List[RankedCell]:
    """排序的前k个单元格; 要求 1 <= k <= N·M"""
    total = len(sheet.ranking)
    if not 1 <= k <= total:
        raise ValueError(f"k must be within [1, {total}], got {k}")
    return sheet.ranking[:k]

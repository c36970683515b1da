"""
评估指标计算器
EM、token-F1、Hits@k、MRR、行/列选择准确率
"""

import re
import string
from collections import Counter
from typing import List, Optional, Sequence, Tuple

from ..models.data_schema import CellCoord, RankedCell

_ARTICLES = re.compile(r'\b(a|an|the)\b', re.UNICODE)
_PUNCTUATION = set(string.punctuation)


def normalize_answer(text: str) -> str:
    """
    答案归一化: 小写, 去标点, 去冠词, 合并空白
    EM/F1和阅读器的答案匹配共用此函数
    """

    def remove_articles(s):
        return _ARTICLES.sub(' ', s)

    def white_space_fix(s):
        return ' '.join(s.split())

    def remove_punc(s):
        return ''.join(ch if ch not in _PUNCTUATION else ' ' for ch in s)

    return white_space_fix(remove_articles(remove_punc(text.lower())))


def exact_match(pred: str, gold: str) -> int:
    """归一化后完全匹配返回1, 否则0"""
    return int(normalize_answer(pred) == normalize_answer(gold))


def token_f1(pred: str, gold: str) -> float:
    """
    归一化词元多重集上的F1

    两边都为空时为1; 只有一边为空时为0
    """
    pred_tokens = normalize_answer(pred).split()
    gold_tokens = normalize_answer(gold).split()

    if not pred_tokens or not gold_tokens:
        return float(pred_tokens == gold_tokens)

    common = Counter(pred_tokens) & Counter(gold_tokens)
    num_same = sum(common.values())
    if num_same == 0:
        return 0.0

    precision = num_same / len(pred_tokens)
    recall = num_same / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def rank_of_gold(ranking: Sequence[RankedCell], gold_cell: Optional[CellCoord]) -> Optional[int]:
    """金标单元格在排序中的名次 (1开始), 不在排序中返回None"""
    if gold_cell is None:
        return None
    for position, ranked in enumerate(ranking, start=1):
        if ranked.coord == tuple(gold_cell):
            return position
    return None


def hits_at_k(rank_of_gold: Optional[int], k: int) -> int:
    """金标名次在前k内返回1"""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return int(rank_of_gold is not None and rank_of_gold <= k)


def mrr(rank_of_gold: Optional[int]) -> float:
    """单个问题的倒数名次"""
    if rank_of_gold is None:
        return 0.0
    if rank_of_gold < 1:
        raise ValueError(f"rank must be 1-based, got {rank_of_gold}")
    return 1.0 / rank_of_gold


def row_col_accuracy(
    predictions: Sequence[Sequence[RankedCell]],
    golds: Sequence[CellCoord],
    k: int
) -> Tuple[float, float]:
    """
    Top-k行/列选择准确率

    Args:
        predictions: 每个问题的单元格排序
        golds: 每个问题的金标单元格
        k: 取前k个单元格

    Returns:
        (行准确率, 列准确率): 金标行(列)出现在前k个单元格的行(列)中的问题比例
    """
    if len(predictions) != len(golds):
        raise ValueError(f"{len(predictions)} predictions for {len(golds)} golds")
    if not golds:
        return 0.0, 0.0

    row_hits = 0
    col_hits = 0
    for ranking, (gold_row, gold_col) in zip(predictions, golds):
        top = ranking[:k]
        row_hits += any(cell.row == gold_row for cell in top)
        col_hits += any(cell.col == gold_col for cell in top)

    return row_hits / len(golds), col_hits / len(golds)


def mean(values: List[float]) -> float:
    return sum(values) / len(values) if values else 0.0

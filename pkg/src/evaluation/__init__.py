"""
评估模块
"""

from .metrics import (
    normalize_answer,
    exact_match,
    token_f1,
    rank_of_gold,
    hits_at_k,
    mrr,
    row_col_accuracy
)
from .error_analysis import classify_error, error_breakdown
from .report import evaluate, ablation_compare, format_report

__all__ = [
    'normalize_answer',
    'exact_match',
    'token_f1',
    'rank_of_gold',
    'hits_at_k',
    'mrr',
    'row_col_accuracy',
    'classify_error',
    'error_breakdown',
    'evaluate',
    'ablation_compare',
    'format_report'
]

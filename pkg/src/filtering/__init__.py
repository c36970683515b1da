"""
段落过滤模块
"""

from .passage_filter import rank_sentences, expand_cell, expand_table_cells

__all__ = ['rank_sentences', 'expand_cell', 'expand_table_cells']

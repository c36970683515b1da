"""
表格-问题对齐数据生成模块
"""

from .schema_linking import (
    STOPWORDS,
    name_based_links,
    value_based_links,
    find_bridge_cells
)
from .label_builder import (
    make_alignment_labels,
    build_alignment_dataset,
    label_coverage,
    read_generated_questions,
    QuestionGenerator
)

__all__ = [
    'STOPWORDS',
    'name_based_links',
    'value_based_links',
    'find_bridge_cells',
    'make_alignment_labels',
    'build_alignment_dataset',
    'label_coverage',
    'read_generated_questions',
    'QuestionGenerator'
]

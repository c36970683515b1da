"""
合成语料模块
"""

from .synthetic import (
    QuestionSpec,
    SyntheticCorpus,
    generate_corpus,
    write_fixture_corpus,
    find_matching_cells
)

__all__ = [
    'QuestionSpec',
    'SyntheticCorpus',
    'generate_corpus',
    'write_fixture_corpus',
    'find_matching_cells'
]

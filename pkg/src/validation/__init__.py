"""
数据验证模块
"""

from .errors import (
    HybridQAError,
    CorpusParseError,
    CorpusValidationError,
    MissingPrerequisiteError
)
from .validator import CorpusValidator, ValidationResult, validate_corpus

__all__ = [
    'HybridQAError',
    'CorpusParseError',
    'CorpusValidationError',
    'MissingPrerequisiteError',
    'CorpusValidator',
    'ValidationResult',
    'validate_corpus'
]

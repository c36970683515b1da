"""
阅读理解模块
"""

from .linearizer import linearize_row
from .instances import (
    reader_context,
    find_answer_spans,
    build_reader_instances,
    clean_instance_filter,
    training_instances
)
from .span_reader import SpanReader, extract_span, load_reader, MAX_SPAN_LENGTH
from .trainer import ReaderTrainingConfig, train_reader
from .answerer import AnswerConfig, SpanExtractor, answer_question

__all__ = [
    'linearize_row',
    'reader_context',
    'find_answer_spans',
    'build_reader_instances',
    'clean_instance_filter',
    'training_instances',
    'SpanReader',
    'extract_span',
    'load_reader',
    'MAX_SPAN_LENGTH',
    'ReaderTrainingConfig',
    'train_reader',
    'AnswerConfig',
    'SpanExtractor',
    'answer_question'
]

"""
数据摄入模块
负责读取语料 (HybridQA JSON, WTQ TSV) 并持久化预测结果
"""

from .hybrid_reader import HybridCorpusReader, load_hybrid_corpus
from .wtq_reader import WTQReader, load_wtq_corpus
from .data_ingestion import DataIngestionEngine
from .corpus_io import (
    write_corpus,
    write_predictions,
    read_predictions,
    write_jsonl,
    read_jsonl,
    split_corpus
)

__all__ = [
    'HybridCorpusReader',
    'load_hybrid_corpus',
    'WTQReader',
    'load_wtq_corpus',
    'DataIngestionEngine',
    'write_corpus',
    'write_predictions',
    'read_predictions',
    'write_jsonl',
    'read_jsonl',
    'split_corpus'
]

"""
数据模型模块
定义所有数据结构和类型
"""

from .data_schema import (
    AnswerSource,
    LinkSource,
    BridgeMatch,
    ErrorCategory,
    CellCoord,
    Passage,
    Cell,
    Table,
    QAExample,
    HybridCorpus,
    BridgeCandidate,
    AlignmentLabels,
    AppendedSentence,
    ExpandedCell,
    ExpansionRecord,
    RankedCell,
    CellScoreSheet,
    LossBreakdown,
    ReaderInstance,
    SpanPrediction,
    PredictionRecord,
    SelectionRecord,
    EvalReport
)

__all__ = [
    'AnswerSource',
    'LinkSource',
    'BridgeMatch',
    'ErrorCategory',
    'CellCoord',
    'Passage',
    'Cell',
    'Table',
    'QAExample',
    'HybridCorpus',
    'BridgeCandidate',
    'AlignmentLabels',
    'AppendedSentence',
    'ExpandedCell',
    'ExpansionRecord',
    'RankedCell',
    'CellScoreSheet',
    'LossBreakdown',
    'ReaderInstance',
    'SpanPrediction',
    'PredictionRecord',
    'SelectionRecord',
    'EvalReport'
]

"""
最终答案生成
每个候选单元格: combined_score = span_score + mu * cell_score, 取最大者
"""

import logging
from typing import Dict, List, Optional, Protocol

from pydantic import BaseModel, Field

from .instances import reader_context
from ..models.data_schema import (
    AnswerSource,
    CellCoord,
    CellScoreSheet,
    ExpandedCell,
    PredictionRecord,
    QAExample,
    SpanPrediction,
    Table
)
from ..selection.cell_scorer import topk_cells

logger = logging.getLogger(__name__)

READER_MODES = ('span', 'cell')


class SpanExtractor(Protocol):
    """阅读器接口"""

    def extract(self, question: str, context: str, top_n: int = 5) -> List[SpanPrediction]:
        ...


class AnswerConfig(BaseModel):
    """答案合并参数"""
    k: int = Field(default=5, ge=1)
    mu: float = Field(default=1.0, ge=0)
    mode: str = Field(default='span', description="span: 片段抽取; cell: 直接返回top-1单元格 (无段落的数据)")


def _cell_record(example: QAExample, sheet: CellScoreSheet, table: Table, cell: CellCoord,
                 span_score: Optional[float] = None) -> PredictionRecord:
    row, col = cell
    return PredictionRecord(
        question_id=example.question_id,
        answer=table.cell(row, col).text,
        cell=cell,
        row_prob=sheet.row_probs[row],
        col_prob=sheet.col_probs[col],
        span_score=span_score
    )


def answer_question(
    example: QAExample,
    sheet: CellScoreSheet,
    table: Table,
    reader: Optional[SpanExtractor],
    config: AnswerConfig,
    expanded_cells: Optional[Dict[CellCoord, ExpandedCell]] = None
) -> PredictionRecord:
    """
    结合单元格分数和片段分数给出最终答案

    无答案预测也按 span_score + mu * cell_score 参与比较; 无答案胜出时,
    来源允许表内答案 (in_table/unknown) 则返回该候选单元格的文本, 否则返回合并分数最高的非空片段

    Args:
        example: 问答样本
        sheet: 单元格打分表
        table: 表格
        reader: 阅读器 (cell模式下可为None)
        config: 合并参数
        expanded_cells: 扩展单元格 (过滤后的段落)

    Returns:
        PredictionRecord
    """
    if config.mode not in READER_MODES:
        raise ValueError(f"mode must be one of {READER_MODES}, got {config.mode}")

    candidates = topk_cells(sheet, min(config.k, len(sheet.ranking)))
    if config.mode == 'cell':
        return _cell_record(example, sheet, table, candidates[0].coord)
    if reader is None:
        raise ValueError("span mode requires a reader")

    best = None
    best_span = None
    for candidate in candidates:
        context = reader_context(table, candidate.coord, expanded_cells)
        predictions = reader.extract(example.question, context)
        if not predictions:
            continue

        # 无答案预测同样参与比较
        top = predictions[0]
        combined = top.span_score + config.mu * candidate.score
        if best is None or combined > best[0]:
            best = (combined, candidate, top)

        span = next((p for p in predictions if not p.is_no_answer), None)
        if span is not None:
            span_combined = span.span_score + config.mu * candidate.score
            if best_span is None or span_combined > best_span[0]:
                best_span = (span_combined, candidate, span)

    if best is None:
        logger.debug(f"{example.question_id}: reader returned nothing, answering with cell {candidates[0].coord}")
        return _cell_record(example, sheet, table, candidates[0].coord)

    combined, candidate, prediction = best
    if prediction.is_no_answer:
        if example.source in (AnswerSource.IN_TABLE, AnswerSource.UNKNOWN) or best_span is None:
            logger.debug(f"{example.question_id}: no-answer wins, answering with cell {candidate.coord}")
            record = _cell_record(example, sheet, table, candidate.coord)
            return record.model_copy(update={'combined_score': combined})
        combined, candidate, prediction = best_span

    prediction = prediction.model_copy(update={'combined_score': combined})
    row, col = candidate.coord
    return PredictionRecord(
        question_id=example.question_id,
        answer=prediction.text,
        cell=candidate.coord,
        row_prob=sheet.row_probs[row],
        col_prob=sheet.col_probs[col],
        span_score=prediction.span_score,
        combined_score=prediction.combined_score
    )

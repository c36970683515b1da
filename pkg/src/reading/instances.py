"""
阅读器样本构造
每个top-k候选单元格生成一个样本: 上下文 = 线性化的行 + 过滤后的段落文本
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .linearizer import linearize_row
from ..encoding.tokenization import basic_tokenize
from ..evaluation.metrics import normalize_answer
from ..models.data_schema import CellCoord, ExpandedCell, QAExample, RankedCell, ReaderInstance, Table

logger = logging.getLogger(__name__)

Candidate = Union[RankedCell, Tuple[int, int, float]]


def _as_ranked(candidate: Candidate) -> RankedCell:
    if isinstance(candidate, RankedCell):
        return candidate
    row, col, score = candidate
    return RankedCell(row=row, col=col, score=score)


def reader_context(
    table: Table,
    cell: CellCoord,
    expanded_cells: Optional[Dict[CellCoord, ExpandedCell]] = None
) -> str:
    """候选单元格的上下文: 所在行的线性化 + 单元格的过滤段落"""
    context = linearize_row(table, cell[0])
    if expanded_cells:
        expanded = expanded_cells.get(tuple(cell))
        if expanded is not None and expanded.passage_text:
            context = f"{context} {expanded.passage_text}"
    return context


def _normalized_positions(tokens: Sequence[str]) -> List[Tuple[str, int]]:
    """归一化后的词元及其在原词元序列中的下标; 冠词和标点被丢弃"""
    positions = []
    for index, token in enumerate(tokens):
        for piece in normalize_answer(token).split():
            positions.append((piece, index))
    return positions


def find_answer_spans(context_tokens: Sequence[str], answer: str) -> List[Tuple[int, int]]:
    """
    答案在上下文中的所有出现位置

    在归一化词元序列上匹配, 返回原词元下标的闭区间

    Args:
        context_tokens: 上下文词元 (basic_tokenize)
        answer: 答案文本

    Returns:
        (start, end) 列表, 按出现顺序
    """
    target = normalize_answer(answer).split()
    if not target:
        return []

    positions = _normalized_positions(context_tokens)
    pieces = [piece for piece, _ in positions]
    width = len(target)
    spans = []
    for i in range(len(pieces) - width + 1):
        if pieces[i:i + width] == target:
            spans.append((positions[i][1], positions[i + width - 1][1]))
    return spans


def build_reader_instances(
    example: QAExample,
    topk: Sequence[Candidate],
    table: Table,
    expanded_cells: Optional[Dict[CellCoord, ExpandedCell]] = None
) -> List[ReaderInstance]:
    """
    构造一个问题的阅读器样本

    答案出现在上下文中的候选为正样本, 只保留名次最高的一个, 其余降为负样本;
    负样本不带答案span

    Args:
        example: 问答样本
        topk: 候选单元格 (按名次)
        table: 表格
        expanded_cells: 扩展单元格

    Returns:
        k个ReaderInstance
    """
    if not topk:
        raise ValueError(f"Example {example.question_id}: top-k candidates must be non-empty")

    instances = []
    has_positive = False
    for rank, candidate in enumerate(topk):
        ranked = _as_ranked(candidate)
        context = reader_context(table, ranked.coord, expanded_cells)
        spans = find_answer_spans(basic_tokenize(context), example.answer_text)

        positive = bool(spans) and not has_positive
        if spans and has_positive:
            logger.debug(f"{example.question_id}: demoted candidate {ranked.coord} at rank {rank}")
        has_positive = has_positive or positive

        instances.append(ReaderInstance(
            question_id=example.question_id,
            question=example.question,
            context=context,
            answer_text=example.answer_text,
            answer_span=spans[0] if positive else None,
            is_positive=positive,
            cell=ranked.coord,
            rank=rank,
            cell_score=ranked.score
        ))
    return instances


def answer_occurrences(instance: ReaderInstance) -> int:
    """答案在样本上下文中的出现次数"""
    return len(find_answer_spans(basic_tokenize(instance.context), instance.answer_text))


def clean_instance_filter(instances: Sequence[ReaderInstance]) -> List[ReaderInstance]:
    """
    干净样本过滤: 保留上下文中答案只出现一次的正样本, 负样本不受影响

    Args:
        instances: 阅读器样本

    Returns:
        过滤后的样本
    """
    kept = []
    for instance in instances:
        if instance.is_positive and answer_occurrences(instance) != 1:
            continue
        kept.append(instance)
    return kept


def training_instances(
    groups: Sequence[Sequence[ReaderInstance]],
    clean: bool = True
) -> List[ReaderInstance]:
    """
    阅读器训练集

    只保留有正样本的问题; clean为True时先做干净样本过滤, 正样本被滤掉的问题整体剔除
    """
    selected = []
    excluded = 0
    for group in groups:
        group = clean_instance_filter(group) if clean else list(group)
        if not any(instance.is_positive for instance in group):
            excluded += 1
            continue
        selected.extend(group)
    logger.info(f"Reader training set: {len(selected)} instances, {excluded} questions without a positive")
    return selected

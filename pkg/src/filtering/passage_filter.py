"""
段落过滤器
按与问题的相似度给链接段落的句子排序, 在词元预算内把top-k句子追加到单元格
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..encoding.text_encoder import TextEncoder
from ..models.data_schema import AppendedSentence, Cell, CellCoord, ExpandedCell, Passage, Table

logger = logging.getLogger(__name__)

SIMILARITIES = ('cosine', 'dot')


def _similarities(query: np.ndarray, matrix: np.ndarray, similarity: str) -> np.ndarray:
    scores = matrix @ query
    if similarity == 'dot':
        return scores

    norms = np.linalg.norm(matrix, axis=1) * np.linalg.norm(query)
    safe = np.where(norms > 0, norms, 1.0)
    return np.where(norms > 0, scores / safe, 0.0)


def rank_sentences(
    question: str,
    sentences: Sequence[str],
    k: int,
    encoder: TextEncoder,
    similarity: str = 'cosine'
) -> List[Tuple[int, float]]:
    """
    按与问题的相似度给句子排序

    Args:
        question: 问题
        sentences: 候选句子
        k: 返回数量上限
        encoder: 文本编码器
        similarity: 'cosine' 或 'dot'

    Returns:
        min(k, 句子数) 个 (句子下标, 相似度), 相似度降序, 相同时下标小者在前
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if similarity not in SIMILARITIES:
        raise ValueError(f"similarity must be one of {SIMILARITIES}, got {similarity}")
    if not sentences:
        return []

    query = encoder.encode(question).pooled
    matrix = np.stack([encoder.encode(sentence).pooled for sentence in sentences])
    scores = _similarities(query, matrix, similarity)

    # 主键: 相似度降序; 次键: 下标升序
    order = np.lexsort((np.arange(len(sentences)), -scores))
    return [(int(i), float(scores[i])) for i in order[:k]]


def expand_cell(
    cell: Cell,
    passages: Dict[str, Passage],
    question: str,
    k: int,
    token_budget: int,
    encoder: TextEncoder,
    similarity: str = 'cosine'
) -> ExpandedCell:
    """
    用排序后的句子扩展单元格

    按名次贪心追加, 跳过会超出预算的句子

    Args:
        cell: 单元格
        passages: 段落字典
        question: 问题
        k: 候选句子数
        token_budget: 词元预算 (含单元格文本)
        encoder: 文本编码器
        similarity: 相似度类型

    Returns:
        ExpandedCell对象
    """
    base_tokens = encoder.count_tokens(cell.text)
    if token_budget <= base_tokens:
        raise ValueError(
            f"token_budget {token_budget} does not exceed the {base_tokens} tokens of cell {cell.coord}"
        )

    candidates: List[Tuple[str, int, str]] = []
    for pid in cell.passage_ids:
        passage = passages.get(pid)
        if passage is None:
            logger.debug(f"Cell {cell.coord} links unknown passage {pid}")
            continue
        candidates.extend((pid, idx, sentence) for idx, sentence in enumerate(passage.sentences))

    appended = []
    token_count = base_tokens
    for idx, score in rank_sentences(question, [c[2] for c in candidates], k, encoder, similarity):
        pid, sentence_index, sentence = candidates[idx]
        n_tokens = encoder.count_tokens(sentence)
        if token_count + n_tokens > token_budget:
            continue
        appended.append(AppendedSentence(
            passage_id=pid,
            sentence_index=sentence_index,
            sentence=sentence,
            similarity=score
        ))
        token_count += n_tokens

    return ExpandedCell(
        cell=cell.coord,
        base_text=cell.text,
        appended_sentences=appended,
        token_count=token_count
    )


def expand_table_cells(
    question: str,
    table: Table,
    passages: Dict[str, Passage],
    k: int,
    token_budget: int,
    encoder: TextEncoder,
    similarity: str = 'cosine'
) -> Dict[CellCoord, ExpandedCell]:
    """
    扩展表格中所有带链接的单元格

    单元格文本本身超出预算时不扩展 (记录警告)

    Returns:
        {(行, 列): ExpandedCell}
    """
    expanded = {}
    for cell in table.iter_cells():
        if not cell.passage_ids:
            continue
        try:
            expanded[cell.coord] = expand_cell(cell, passages, question, k, token_budget, encoder, similarity)
        except ValueError as e:
            logger.warning(f"Table {table.table_id}: {e}")
    return expanded

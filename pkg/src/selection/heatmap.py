"""
问题词元 × 表头词元相关度热力图
编码器词元状态的余弦相似度, 导出为CSV用于可视化
"""

import logging
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from .alignment_head import header_spans
from ..encoding.text_encoder import TextEncoder

logger = logging.getLogger(__name__)

NORMALIZATIONS = ('none', 'softmax')


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    return matrix / np.where(norms > 0, norms, 1.0)


def relevance_heatmap(
    question: str,
    headers: Sequence[str],
    encoder: TextEncoder,
    normalize: str = 'none'
) -> pd.DataFrame:
    """
    计算热力图矩阵

    Args:
        question: 问题
        headers: 表头列表
        encoder: 文本编码器
        normalize: 'none' 把余弦映射到 (cos+1)/2; 'softmax' 对每个问题词元在表头词元上做softmax

    Returns:
        DataFrame, 行为问题词元, 列为 "表头/词元", 取值在[0,1]
    """
    if normalize not in NORMALIZATIONS:
        raise ValueError(f"normalize must be one of {NORMALIZATIONS}, got {normalize}")

    encoded_question = encoder.encode(question)
    encoded_headers = encoder.encode(" ".join(headers))

    cosine = _unit_rows(encoded_question.token_states) @ _unit_rows(encoded_headers.token_states).T
    if normalize == 'softmax':
        shifted = np.exp(cosine - cosine.max(axis=1, keepdims=True))
        values = shifted / shifted.sum(axis=1, keepdims=True)
    else:
        values = np.clip((cosine + 1.0) / 2.0, 0.0, 1.0)

    columns = []
    for header, (start, end) in zip(headers, header_spans(headers, encoder)):
        columns.extend(f"{header}/{token}" for token in encoded_headers.tokens[start:end])

    return pd.DataFrame(values, index=encoded_question.tokens, columns=columns[:values.shape[1]])


def write_heatmap(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """写出热力图CSV"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, float_format='%.6f', index_label='question_token')
    logger.debug(f"Wrote heatmap {path}")
    return path

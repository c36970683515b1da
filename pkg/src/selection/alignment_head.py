"""
表格-问题对齐头
p(列j相关) = sigmoid(W · (h_q * h_c_j) + b)
"""

import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
import torch
from pydantic import BaseModel, Field, field_validator
from torch import nn

from ..encoding.text_encoder import TextEncoder

logger = logging.getLogger(__name__)


class AlignmentHeadParams(BaseModel):
    """对齐头参数: W为d维向量, b为标量"""
    W: List[float] = Field(min_length=1)
    b: float = 0.0

    @field_validator('W')
    @classmethod
    def validate_finite(cls, v):
        if not all(math.isfinite(x) for x in v):
            raise ValueError('W must be finite')
        return v

    @field_validator('b')
    @classmethod
    def validate_bias(cls, v):
        if not math.isfinite(v):
            raise ValueError('b must be finite')
        return v

    @property
    def dim(self) -> int:
        return len(self.W)

    @classmethod
    def zeros(cls, dim: int) -> 'AlignmentHeadParams':
        return cls(W=[0.0] * dim, b=0.0)

    @classmethod
    def random(cls, dim: int, seed: int = 13, scale: float = 0.1) -> 'AlignmentHeadParams':
        rng = np.random.default_rng(seed)
        return cls(W=(rng.standard_normal(dim) * scale).tolist(), b=float(rng.standard_normal() * scale))


class AlignmentHead(nn.Module):
    """可训练的对齐头, 与AlignmentHeadParams互相转换"""

    def __init__(self, dim: int):
        super().__init__()
        self.weight = nn.Parameter(torch.zeros(dim))
        self.bias = nn.Parameter(torch.zeros(()))

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        """features: (M, d) 的 h_q * h_c, 返回M个logit"""
        return features @ self.weight + self.bias

    def to_params(self) -> AlignmentHeadParams:
        return AlignmentHeadParams(W=self.weight.detach().cpu().tolist(), b=float(self.bias.detach()))

    def load_params(self, params: AlignmentHeadParams):
        with torch.no_grad():
            self.weight.copy_(torch.tensor(params.W, dtype=self.weight.dtype))
            self.bias.fill_(params.b)


def header_spans(headers: Sequence[str], encoder: TextEncoder) -> List[Tuple[int, int]]:
    """表头伪句中每个表头的词元区间 [start, end)"""
    spans = []
    start = 0
    for header in headers:
        n_tokens = max(1, encoder.count_tokens(header))
        spans.append((start, start + n_tokens))
        start += n_tokens
    return spans


def header_states(headers: Sequence[str], encoder: TextEncoder) -> np.ndarray:
    """
    每个表头的表示

    所有表头拼接成伪句编码一次, 每个表头取其词元状态的均值

    Returns:
        (M, d) 矩阵
    """
    if not headers:
        raise ValueError("headers must be non-empty")

    spans = header_spans(headers, encoder)
    if spans[-1][1] > encoder.max_length:
        logger.warning(f"Header pseudo sentence of {spans[-1][1]} tokens exceeds the encoder limit; "
                       f"encoding headers separately")
        return np.stack([encoder.encode(header).pooled for header in headers])

    states = encoder.encode(" ".join(headers)).token_states
    return np.stack([states[start:end].mean(axis=0) for start, end in spans])


def alignment_features(question: str, headers: Sequence[str], encoder: TextEncoder) -> np.ndarray:
    """h_q * h_c_j, 形状 (M, d)"""
    h_q = encoder.encode(question).pooled
    return h_q[None, :] * header_states(headers, encoder)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def align_relevance(
    question: str,
    headers: Sequence[str],
    params: AlignmentHeadParams,
    encoder: TextEncoder
) -> List[float]:
    """
    每列与问题的相关度

    Args:
        question: 问题
        headers: 表头列表
        params: 对齐头参数
        encoder: 文本编码器

    Returns:
        M个[0,1]内的相关度
    """
    if params.dim != encoder.dim:
        raise ValueError(f"Alignment head dimension {params.dim} does not match encoder dimension {encoder.dim}")

    features = alignment_features(question, headers, encoder)
    logits = features @ np.asarray(params.W) + params.b
    return _sigmoid(logits).tolist()


def alignment_loss_and_grad(
    features: np.ndarray,
    labels: Sequence[int],
    params: AlignmentHeadParams
) -> Tuple[float, np.ndarray, float]:
    """
    对齐BCE损失及其对W、b的解析梯度

    loss = mean_j BCE(sigmoid(W·x_j + b), l_j)
    dW = mean_j (p_j - l_j) x_j;  db = mean_j (p_j - l_j)

    Args:
        features: (M, d) 特征 h_q * h_c
        labels: M个0/1标签
        params: 对齐头参数

    Returns:
        (损失, W的梯度, b的梯度)
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.shape != (len(y), params.dim):
        raise ValueError(f"features of shape {x.shape} do not match {len(y)} labels and dim {params.dim}")

    z = x @ np.asarray(params.W, dtype=np.float64) + params.b
    # log(1 + e^z) - y*z, 数值稳定形式
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    residual = _sigmoid(z) - y
    grad_w = x.T @ residual / len(y)
    grad_b = float(residual.mean())
    return loss, grad_w, grad_b


def sgd_step(
    params: AlignmentHeadParams,
    features: np.ndarray,
    labels: Sequence[int],
    lr: float
) -> AlignmentHeadParams:
    """沿对齐损失的负梯度走一步"""
    _, grad_w, grad_b = alignment_loss_and_grad(features, labels, params)
    return AlignmentHeadParams(
        W=(np.asarray(params.W) - lr * grad_w).tolist(),
        b=params.b - lr * grad_b
    )

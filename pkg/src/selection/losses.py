"""
多任务联合损失
L = L_row + L_column + sigma * BCE(对齐预测, 对齐标签)
"""

from typing import Sequence, Tuple, Union

import torch
import torch.nn.functional as F

from ..models.data_schema import AlignmentLabels, LossBreakdown

_EPS = 1e-12

TensorLike = Union[torch.Tensor, Sequence[float]]


def _as_tensor(values: TensorLike) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        return values
    return torch.tensor(list(values), dtype=torch.float64)


def _one_hot(logits: torch.Tensor, index: int, name: str) -> torch.Tensor:
    if not 0 <= index < logits.numel():
        raise ValueError(f"{name} label {index} out of range for {logits.numel()} logits")
    target = torch.zeros_like(logits)
    target[index] = 1.0
    return target


def joint_loss_tensors(
    row_logits: TensorLike,
    col_logits: TensorLike,
    align_scores: TensorLike,
    row_label: int,
    col_label: int,
    align_labels: Union[AlignmentLabels, Sequence[int]],
    sigma: float
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    联合损失 (保留计算图)

    Args:
        row_logits: N个行logit
        col_logits: M个列logit
        align_scores: M个对齐概率
        row_label: 金标行
        col_label: 金标列
        align_labels: 对齐标签
        sigma: 对齐损失权重, [0, 1]

    Returns:
        (total, l_row, l_col, l_align)
    """
    if not 0.0 <= sigma <= 1.0:
        raise ValueError(f"sigma must be within [0, 1], got {sigma}")

    row_logits = _as_tensor(row_logits)
    col_logits = _as_tensor(col_logits)
    align_scores = _as_tensor(align_scores)

    labels = align_labels.labels if isinstance(align_labels, AlignmentLabels) else list(align_labels)
    if len(labels) != align_scores.numel():
        raise ValueError(f"{len(labels)} alignment labels for {align_scores.numel()} scores")
    align_target = torch.tensor(labels, dtype=align_scores.dtype, device=align_scores.device)

    l_row = F.binary_cross_entropy_with_logits(row_logits, _one_hot(row_logits, row_label, 'row'))
    l_col = F.binary_cross_entropy_with_logits(col_logits, _one_hot(col_logits, col_label, 'column'))
    l_align = F.binary_cross_entropy(align_scores.clamp(_EPS, 1.0 - _EPS), align_target)

    total = l_row + l_col + sigma * l_align
    return total, l_row, l_col, l_align


def joint_loss(
    row_logits: TensorLike,
    col_logits: TensorLike,
    align_scores: TensorLike,
    row_label: int,
    col_label: int,
    align_labels: Union[AlignmentLabels, Sequence[int]],
    sigma: float
) -> LossBreakdown:
    """联合损失的数值分解"""
    total, l_row, l_col, l_align = joint_loss_tensors(
        row_logits, col_logits, align_scores, row_label, col_label, align_labels, sigma
    )
    return LossBreakdown(
        l_row=float(l_row),
        l_col=float(l_col),
        l_align=float(l_align),
        sigma=sigma,
        total=float(total)
    )

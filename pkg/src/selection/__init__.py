"""
单元格选择模块
"""

from .serializer import serialize_row, serialize_column
from .cell_scorer import combine_scores, topk_cells
from .alignment_head import (
    AlignmentHead,
    AlignmentHeadParams,
    align_relevance,
    alignment_features,
    alignment_loss_and_grad,
    sgd_step
)
from .losses import joint_loss, joint_loss_tensors
from .selector_model import SelectorModel, load_selector
from .trainer import SelectorTrainingConfig, train_selector, selection_hits_at_1
from .heatmap import relevance_heatmap, write_heatmap

__all__ = [
    'serialize_row',
    'serialize_column',
    'combine_scores',
    'topk_cells',
    'AlignmentHead',
    'AlignmentHeadParams',
    'align_relevance',
    'alignment_features',
    'alignment_loss_and_grad',
    'sgd_step',
    'joint_loss',
    'joint_loss_tensors',
    'SelectorModel',
    'load_selector',
    'SelectorTrainingConfig',
    'train_selector',
    'selection_hits_at_1',
    'relevance_heatmap',
    'write_heatmap'
]

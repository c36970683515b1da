"""
检查点读写
torch文件, 记录格式版本、模型类型、编码器超参数、词表和参数
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

import torch

from .backbone import TrainableEncoder
from .pretrained import PretrainedEncoder
from .tiny_encoder import BpeVocabulary, TinyEncoder

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def save_checkpoint(
    path: Union[str, Path],
    kind: str,
    encoder: TrainableEncoder,
    state_dict: Dict[str, torch.Tensor],
    extra: Optional[Dict[str, Any]] = None
) -> Path:
    """
    保存检查点 (先写临时文件再替换)

    Args:
        path: 目标路径
        kind: 模型类型, 如 'selector' / 'reader'
        encoder: 模型使用的编码器 (保存其超参数和词表)
        state_dict: 模型参数
        extra: 其他元数据 (训练历史、头部超参数等)

    Returns:
        写入的路径
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    payload = {
        'format_version': CHECKPOINT_VERSION,
        'kind': kind,
        'encoder_kind': encoder.kind,
        'encoder_config': encoder.config(),
        'dim': encoder.dim,
        'vocab': encoder.vocab_payload(),
        'state_dict': {k: v.detach().cpu() for k, v in state_dict.items()},
        'extra': extra or {},
    }

    tmp_path = path.with_name(path.name + '.tmp')
    torch.save(payload, tmp_path)
    os.replace(tmp_path, path)

    logger.info(f"Saved {kind} checkpoint to {path}")
    return path


def load_checkpoint(path: Union[str, Path], expected_kind: Optional[str] = None) -> Dict[str, Any]:
    """
    读取检查点

    Args:
        path: 检查点路径
        expected_kind: 期望的模型类型, 不符时报错

    Returns:
        检查点字典
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {path}")

    payload = torch.load(path, map_location='cpu', weights_only=True)

    version = payload.get('format_version')
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"Unsupported checkpoint version {version} in {path}")
    if expected_kind is not None and payload.get('kind') != expected_kind:
        raise ValueError(f"{path} holds a {payload.get('kind')} checkpoint, expected {expected_kind}")

    return payload


def encoder_from_checkpoint(payload: Dict[str, Any]) -> TrainableEncoder:
    """按检查点元数据重建编码器 (参数由模型的load_state_dict恢复)"""
    kind = payload['encoder_kind']
    if kind == TinyEncoder.kind:
        vocab = BpeVocabulary.from_str(payload['vocab'])
        return TinyEncoder.from_config(vocab, payload['encoder_config'])
    if kind == PretrainedEncoder.kind:
        return PretrainedEncoder.from_config(payload['encoder_config'])
    raise ValueError(f"Unknown encoder kind in checkpoint: {kind}")

"""
阅读器训练
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import torch
from pydantic import BaseModel, Field
from tqdm import tqdm

from .span_reader import MAX_SPAN_LENGTH, SpanReader
from ..encoding.backbone import TrainableEncoder, set_seed
from ..models.data_schema import ReaderInstance

logger = logging.getLogger(__name__)


class ReaderTrainingConfig(BaseModel):
    """阅读器训练超参数"""
    lr: float = Field(default=5e-5, gt=0)
    batch_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=4, ge=1)
    seed: int = 13
    weight_decay: float = Field(default=0.01, ge=0)
    max_grad_norm: float = Field(default=1.0, gt=0)
    max_span_length: int = Field(default=MAX_SPAN_LENGTH, ge=1)
    progress: bool = True


@dataclass
class ReaderTrainingResult:
    """训练结果: 模型和每个epoch的平均损失"""
    model: SpanReader
    epoch_losses: List[float]


def train_reader(
    instances: Sequence[ReaderInstance],
    config: ReaderTrainingConfig,
    encoder: TrainableEncoder,
    checkpoint_path: Optional[Union[str, Path]] = None
) -> ReaderTrainingResult:
    """
    训练阅读器

    Args:
        instances: 训练样本 (正样本带span, 负样本训练无答案)
        config: 训练超参数
        encoder: 可训练编码器
        checkpoint_path: 检查点路径 (可选)

    Returns:
        ReaderTrainingResult, 模型为最后一个epoch的参数
    """
    if not instances:
        raise ValueError("Cannot train the reader without instances")

    set_seed(config.seed)
    model = SpanReader(encoder, max_span_length=config.max_span_length, seed=config.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    generator = torch.Generator().manual_seed(config.seed)

    epoch_losses: List[float] = []
    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(instances), generator=generator).tolist()
        total_loss = 0.0
        counted = 0
        skipped = 0

        batches = range(0, len(order), config.batch_size)
        for start in tqdm(batches, desc=f"reader epoch {epoch}", disable=not config.progress):
            batch_instances = [instances[idx] for idx in order[start:start + config.batch_size]]
            optimizer.zero_grad()
            encoded = model.encode([(inst.question, inst.context) for inst in batch_instances])

            losses = []
            for i, instance in enumerate(batch_instances):
                loss = model.instance_loss(encoded, i, instance.answer_span)
                if loss is None:
                    skipped += 1
                    continue
                losses.append(loss)
            if not losses:
                continue

            batch_loss = torch.stack(losses).mean()
            batch_loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.max_grad_norm)
            optimizer.step()

            total_loss += float(batch_loss) * len(losses)
            counted += len(losses)

        mean_loss = total_loss / counted if counted else 0.0
        epoch_losses.append(mean_loss)
        if skipped:
            logger.debug(f"Epoch {epoch}: skipped {skipped} instances whose answer was truncated")
        logger.info(f"Reader epoch {epoch}: loss={mean_loss:.4f}")

    model.eval()
    if checkpoint_path is not None:
        model.save(checkpoint_path, extra={'epoch_losses': epoch_losses})

    return ReaderTrainingResult(model=model, epoch_losses=epoch_losses)

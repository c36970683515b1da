"""
选择器训练
AdamW + 梯度累积 (batch), 每个epoch在dev上计算Hits@1, 保留最好的epoch
"""

import copy
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import torch
from pydantic import BaseModel, Field
from tqdm import tqdm

from .losses import joint_loss_tensors
from .selector_model import SelectorModel
from ..encoding.backbone import TrainableEncoder, set_seed
from ..evaluation.metrics import hits_at_k, rank_of_gold
from ..models.data_schema import AlignmentLabels, CellCoord, ExpandedCell, HybridCorpus, LossBreakdown

logger = logging.getLogger(__name__)

ExpandedByQuestion = Dict[str, Dict[CellCoord, ExpandedCell]]


class SelectorTrainingConfig(BaseModel):
    """选择器训练超参数"""
    sigma: float = Field(default=0.5, ge=0, le=1)
    lr: float = Field(default=5e-5, gt=0)
    batch_size: int = Field(default=32, ge=1)
    epochs: int = Field(default=4, ge=1)
    seed: int = 13
    weight_decay: float = Field(default=0.01, ge=0)
    max_grad_norm: float = Field(default=1.0, gt=0)
    progress: bool = True


class EpochRecord(BaseModel):
    """一个epoch的训练记录"""
    epoch: int
    loss: LossBreakdown
    dev_hits_at_1: float


@dataclass
class SelectorTrainingResult:
    """训练结果"""
    model: SelectorModel
    history: List[EpochRecord]
    best_epoch: int


def selection_hits_at_1(
    model: SelectorModel,
    corpus: HybridCorpus,
    expanded: Optional[ExpandedByQuestion] = None
) -> float:
    """带金标单元格的样本上的Hits@1"""
    expanded = expanded or {}
    hits = []
    for example in corpus.examples:
        if example.gold_cell is None:
            continue
        sheet = model.score_table(example.question, corpus.table_for(example), expanded.get(example.question_id))
        hits.append(hits_at_k(rank_of_gold(sheet.ranking, example.gold_cell), 1))
    return sum(hits) / len(hits) if hits else 0.0


def _training_examples(corpus: HybridCorpus, labels: List[AlignmentLabels]) -> List[Tuple]:
    by_question = {item.question_id: item for item in labels}
    examples = []
    skipped = 0
    for example in corpus.examples:
        label = by_question.get(example.question_id)
        if example.gold_cell is None or label is None:
            skipped += 1
            continue
        examples.append((example, corpus.table_for(example), label))
    if skipped:
        logger.info(f"Skipped {skipped} examples without gold cell or alignment labels")
    return examples


def train_selector(
    corpus: HybridCorpus,
    labels: List[AlignmentLabels],
    config: SelectorTrainingConfig,
    encoder: TrainableEncoder,
    dev_corpus: Optional[HybridCorpus] = None,
    expanded: Optional[ExpandedByQuestion] = None,
    checkpoint_path: Optional[Union[str, Path]] = None
) -> SelectorTrainingResult:
    """
    训练选择器

    Args:
        corpus: 训练语料
        labels: 训练样本的对齐标签
        config: 训练超参数
        encoder: 可训练编码器 (与模型共享参数)
        dev_corpus: 选模型用的dev语料, 缺省时使用训练语料
        expanded: 每个问题的扩展单元格
        checkpoint_path: 检查点路径 (可选)

    Returns:
        SelectorTrainingResult, model已恢复为dev Hits@1最好的epoch (同分取较早的epoch)
    """
    examples = _training_examples(corpus, labels)
    if not examples:
        raise ValueError("Cannot train the selector on an empty corpus")

    expanded = expanded or {}
    set_seed(config.seed)
    model = SelectorModel(encoder, seed=config.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    generator = torch.Generator().manual_seed(config.seed)

    history: List[EpochRecord] = []
    best_state = None
    best_epoch = 0
    best_hits = -1.0

    for epoch in range(1, config.epochs + 1):
        model.train()
        order = torch.randperm(len(examples), generator=generator).tolist()
        sums = [0.0, 0.0, 0.0]

        batches = range(0, len(order), config.batch_size)
        for start in tqdm(batches, desc=f"selector epoch {epoch}", disable=not config.progress):
            batch = order[start:start + config.batch_size]
            optimizer.zero_grad()
            for idx in batch:
                example, table, label = examples[idx]
                total, l_row, l_col, l_align = joint_loss_tensors(
                    model.row_logits(example.question, table, expanded.get(example.question_id)),
                    model.column_logits(example.question, table, expanded.get(example.question_id)),
                    torch.sigmoid(model.align_logits(example.question, table.headers)),
                    example.gold_cell[0],
                    example.gold_cell[1],
                    label,
                    config.sigma
                )
                (total / len(batch)).backward()
                sums[0] += float(l_row)
                sums[1] += float(l_col)
                sums[2] += float(l_align)
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.max_grad_norm)
            optimizer.step()

        model.eval()
        n = len(examples)
        loss = LossBreakdown.combine(sums[0] / n, sums[1] / n, sums[2] / n, config.sigma)
        dev_hits = selection_hits_at_1(model, dev_corpus or corpus, expanded)
        history.append(EpochRecord(epoch=epoch, loss=loss, dev_hits_at_1=dev_hits))
        logger.info(
            f"Epoch {epoch}: loss={loss.total:.4f} (row={loss.l_row:.4f}, col={loss.l_col:.4f}, "
            f"align={loss.l_align:.4f}), dev Hits@1={dev_hits:.4f}"
        )

        if dev_hits > best_hits:
            best_hits = dev_hits
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())

    model.load_state_dict(best_state)
    model.eval()
    logger.info(f"Best epoch {best_epoch} with dev Hits@1={best_hits:.4f}")

    if checkpoint_path is not None:
        model.save(checkpoint_path, extra={
            'history': [record.model_dump(mode='json') for record in history],
            'best_epoch': best_epoch,
            'sigma': config.sigma,
        })

    return SelectorTrainingResult(model=model, history=history, best_epoch=best_epoch)

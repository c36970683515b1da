"""
片段抽取阅读器
起止位置分布 + 片段打分 S_span = MLP([h_start, h_end]); [CLS]位置表示无答案
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import torch
import torch.nn.functional as F
from torch import nn

from ..encoding.backbone import SequenceBatch, TrainableEncoder
from ..encoding.checkpoint import encoder_from_checkpoint, load_checkpoint, save_checkpoint
from ..encoding.tokenization import token_offsets
from ..models.data_schema import SpanPrediction

logger = logging.getLogger(__name__)

MAX_SPAN_LENGTH = 30


class SpanReader(nn.Module):
    """
    片段抽取模型

    局部位置0是无答案哨兵 ([CLS]), 局部位置k (k>=1) 是第k-1个上下文词元
    """

    def __init__(self, encoder: TrainableEncoder, max_span_length: int = MAX_SPAN_LENGTH, seed: int = 13):
        super().__init__()
        if max_span_length < 1:
            raise ValueError(f"max_span_length must be >= 1, got {max_span_length}")

        self.encoder = encoder
        self.backbone = encoder.module
        self.max_span_length = max_span_length

        dim = encoder.dim
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.start_head = nn.Linear(dim, 1)
            self.end_head = nn.Linear(dim, 1)
            self.span_mlp = nn.Sequential(nn.Linear(2 * dim, dim), nn.Tanh(), nn.Linear(dim, 1))

    def encode(self, pairs: Sequence[Tuple[str, str]]) -> SequenceBatch:
        return self.encoder.encode_pairs(pairs)

    @staticmethod
    def context_length(batch: SequenceBatch, i: int) -> int:
        """截断后保留的上下文词元数"""
        return len(batch.tokens[i]) - batch.b_starts[i] - 1

    def local_states(self, batch: SequenceBatch, i: int) -> torch.Tensor:
        """[CLS] + 上下文词元的状态, (T+1, d)"""
        start = batch.b_starts[i]
        n_context = self.context_length(batch, i)
        return torch.cat([batch.states[i, :1], batch.states[i, start:start + n_context]], dim=0)

    def candidate_pairs(self, n_context: int, device: torch.device) -> Tuple[torch.Tensor, torch.Tensor]:
        """所有候选 (start, end): 无答案 (0, 0) 以及 1 <= s <= e <= T 且长度不超过上限"""
        starts = [0]
        ends = [0]
        for s in range(1, n_context + 1):
            for e in range(s, min(n_context, s + self.max_span_length - 1) + 1):
                starts.append(s)
                ends.append(e)
        return (torch.tensor(starts, dtype=torch.long, device=device),
                torch.tensor(ends, dtype=torch.long, device=device))

    def score_instance(
        self,
        batch: SequenceBatch,
        i: int
    ) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        单个样本的打分

        Returns:
            (start_logits (T+1,), end_logits (T+1,), 候选start, 候选end, 候选S_span)
        """
        states = self.local_states(batch, i)
        start_logits = self.start_head(states).squeeze(-1)
        end_logits = self.end_head(states).squeeze(-1)
        starts, ends = self.candidate_pairs(states.size(0) - 1, states.device)
        span_scores = self.span_mlp(torch.cat([states[starts], states[ends]], dim=-1)).squeeze(-1)
        return start_logits, end_logits, starts, ends, span_scores

    def instance_loss(self, batch: SequenceBatch, i: int, answer_span: Optional[Tuple[int, int]]) -> Optional[torch.Tensor]:
        """
        起始CE + 结束CE + 候选片段CE; 负样本的目标是无答案哨兵

        答案落在截断区域之外时返回None
        """
        start_logits, end_logits, starts, ends, span_scores = self.score_instance(batch, i)

        if answer_span is None:
            target_start = target_end = 0
        else:
            target_start, target_end = answer_span[0] + 1, answer_span[1] + 1
            if target_end >= start_logits.size(0) or target_end - target_start + 1 > self.max_span_length:
                return None

        span_target = int(((starts == target_start) & (ends == target_end)).nonzero()[0])

        def ce(logits: torch.Tensor, target: int) -> torch.Tensor:
            return F.cross_entropy(logits[None, :], torch.tensor([target], device=logits.device))

        return ce(start_logits, target_start) + ce(end_logits, target_end) + ce(span_scores, span_target)

    def span_distribution(self, question: str, context: str) -> Tuple[List[float], List[float]]:
        """起/止概率分布, 长度T+1 (下标0为无答案哨兵)"""
        with torch.no_grad():
            batch = self.encode([(question, context)])
            start_logits, end_logits, _, _, _ = self.score_instance(batch, 0)
        return torch.softmax(start_logits, dim=0).tolist(), torch.softmax(end_logits, dim=0).tolist()

    def extract(self, question: str, context: str, top_n: int = 5) -> List[SpanPrediction]:
        """
        抽取得分最高的片段

        Args:
            question: 问题
            context: 上下文
            top_n: 返回数量

        Returns:
            按S_span降序的SpanPrediction; 无答案预测的start=end=-1
        """
        with torch.no_grad():
            batch = self.encode([(question, context)])
            _, _, starts, ends, span_scores = self.score_instance(batch, 0)

        offsets = token_offsets(context)
        order = torch.argsort(span_scores, descending=True, stable=True)[:top_n].tolist()
        predictions = []
        for index in order:
            s, e = int(starts[index]) - 1, int(ends[index]) - 1
            score = float(span_scores[index])
            if s < 0:
                predictions.append(SpanPrediction(start=-1, end=-1, text="", span_score=score))
            else:
                predictions.append(SpanPrediction(
                    start=s,
                    end=e,
                    text=context[offsets[s][0]:offsets[e][1]],
                    span_score=score
                ))
        return predictions

    def save(self, path: Union[str, Path], extra: Optional[dict] = None) -> Path:
        extra = dict(extra or {})
        extra['max_span_length'] = self.max_span_length
        return save_checkpoint(path, 'reader', self.encoder, self.state_dict(), extra)


def extract_span(question: str, context: str, model: SpanReader, top_n: int = 5) -> List[SpanPrediction]:
    """抽取片段; 空上下文只返回一个无答案预测"""
    return model.extract(question, context, top_n=top_n)


def load_reader(path: Union[str, Path]) -> SpanReader:
    """从检查点恢复阅读器 (eval模式)"""
    payload = load_checkpoint(path, expected_kind='reader')
    model = SpanReader(
        encoder_from_checkpoint(payload),
        max_span_length=payload['extra'].get('max_span_length', MAX_SPAN_LENGTH)
    )
    model.load_state_dict(payload['state_dict'])
    model.eval()
    return model

"""
可训练编码器基类
选择器和阅读器在此接口上批量编码序列对并反向传播
"""

import logging
import random
from abc import abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from .text_encoder import TextEncoder
from .tokenization import EMPTY_TOKEN, build_pair_tokens

logger = logging.getLogger(__name__)


@dataclass
class SequenceBatch:
    """
    一批编码后的序列

    Attributes:
        states: (B, L, d) 逐词元状态, 位置与tokens对齐
        mask: (B, L) 有效位置为True
        tokens: 每条序列的词元 (含哨兵)
        b_starts: 序列对中第二序列的起始位置
    """
    states: torch.Tensor
    mask: torch.Tensor
    tokens: List[List[str]]
    b_starts: List[int]

    @property
    def pooled(self) -> torch.Tensor:
        """[CLS]位置的状态, (B, d)"""
        return self.states[:, 0, :]


class TrainableEncoder(TextEncoder):
    """
    可训练编码器

    子类提供torch模块和 _forward(词元序列, 段落ID) -> (状态, 掩码)
    """

    kind: str = "trainable"

    @property
    @abstractmethod
    def module(self) -> nn.Module:
        """持有全部可训练参数的模块"""

    @abstractmethod
    def _forward(
        self,
        token_lists: List[List[str]],
        segment_lists: List[List[int]]
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """返回 (B, L, d) 状态和 (B, L) 掩码"""

    @abstractmethod
    def config(self) -> Dict[str, Any]:
        """重建编码器所需的超参数"""

    def vocab_payload(self) -> Optional[str]:
        """需要随检查点保存的词表 (序列化字符串)"""
        return None

    @property
    def device(self) -> torch.device:
        return next(self.module.parameters()).device

    def encode_pairs(self, pairs: Sequence[Tuple[str, str]]) -> SequenceBatch:
        """
        批量编码序列对, 保留计算图

        Args:
            pairs: (第一序列, 第二序列) 列表

        Returns:
            SequenceBatch对象
        """
        return self.encode_token_pairs([(self.tokenize(a), self.tokenize(b)) for a, b in pairs])

    def encode_token_pairs(self, pairs: Sequence[Tuple[List[str], List[str]]]) -> SequenceBatch:
        """批量编码已分词的序列对"""
        token_lists, segment_lists, b_starts = [], [], []
        for tokens_a, tokens_b in pairs:
            tokens, segments, b_start = build_pair_tokens(tokens_a, tokens_b, self.max_length)
            token_lists.append(tokens)
            segment_lists.append(segments)
            b_starts.append(b_start)

        states, mask = self._forward(token_lists, segment_lists)
        return SequenceBatch(states=states, mask=mask, tokens=token_lists, b_starts=b_starts)

    def _encode_tokens(self, tokens: List[str], segments: List[int]) -> np.ndarray:
        with torch.no_grad():
            states, _ = self._forward([tokens], [segments])
        return states[0, :len(tokens)].double().cpu().numpy()

    def encode_sequences(self, token_lists: Sequence[List[str]]) -> SequenceBatch:
        """批量编码单序列 (不加哨兵), 保留计算图; 空序列替换为[EMPTY]"""
        prepared = []
        for tokens in token_lists:
            tokens = list(tokens) or [EMPTY_TOKEN]
            if len(tokens) > self.max_length:
                logger.warning(f"Sequence of {len(tokens)} tokens truncated to {self.max_length}")
                tokens = tokens[:self.max_length]
            prepared.append(tokens)

        states, mask = self._forward(prepared, [[0] * len(tokens) for tokens in prepared])
        return SequenceBatch(states=states, mask=mask, tokens=prepared, b_starts=[0] * len(prepared))


def set_seed(seed: int):
    """固定python、numpy和torch的随机种子"""
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)

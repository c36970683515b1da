"""
预训练编码器适配器
通过transformers加载预训练模型, 子词状态按词元取均值, 与basic_tokenize对齐
"""

import logging
from typing import Any, Dict, List, Tuple

import torch
from torch import nn

from .backbone import TrainableEncoder
from .tokenization import CLS_TOKEN, EMPTY_TOKEN, SEP_TOKEN

logger = logging.getLogger(__name__)


class PretrainedEncoder(TrainableEncoder):
    """
    预训练模型适配器

    Args:
        model_name: Hugging Face模型名或本地路径
        pooling: 单序列池化方式, 'mean' 或 'cls'
        max_length: 最大子词长度
    """

    kind = "external"
    # encode()缓存上一次的[CLS]状态, 不能并发调用
    thread_safe = False

    def __init__(self, model_name: str, pooling: str = 'mean', max_length: int = 512):
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError:
            raise ImportError(
                "transformers is required for the external encoder. "
                "Install with: pip install transformers"
            )

        if pooling not in ('mean', 'cls'):
            raise ValueError(f"pooling must be 'mean' or 'cls', got {pooling}")

        self.model_name = model_name
        self.pooling = pooling
        self._max_length = max_length
        self.hf_tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name)
        self.model.eval()
        self._last_cls = None
        logger.info(f"Loaded pretrained encoder {model_name} (dim={self.dim})")

    @property
    def dim(self) -> int:
        return int(self.model.config.hidden_size)

    @property
    def max_length(self) -> int:
        return self._max_length

    @property
    def module(self) -> nn.Module:
        return self.model

    def config(self) -> Dict[str, Any]:
        return {'model_name': self.model_name, 'pooling': self.pooling, 'max_length': self._max_length}

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> 'PretrainedEncoder':
        return cls(**config)

    def _pool(self, states):
        if self.pooling == 'cls':
            return self._last_cls.copy()
        return states.mean(axis=0)

    def _encode_tokens(self, tokens, segments):
        with torch.no_grad():
            states, _, cls_states = self._run([tokens], [segments])
        self._last_cls = cls_states[0].double().cpu().numpy()
        return states[0, :len(tokens)].double().cpu().numpy()

    def _forward(
        self,
        token_lists: List[List[str]],
        segment_lists: List[List[int]]
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        states, mask, _ = self._run(token_lists, segment_lists)
        return states, mask

    def _run(self, token_lists, segment_lists):
        """子词编码后按词元取均值; 哨兵位置使用模型自身的特殊词元状态"""
        unk = self.hf_tokenizer.unk_token or "[UNK]"
        words_a, words_b = [], []
        for tokens, segments in zip(token_lists, segment_lists):
            a = [t if t != EMPTY_TOKEN else unk for t, s in zip(tokens, segments)
                 if s == 0 and t not in (CLS_TOKEN, SEP_TOKEN)]
            b = [t for t, s in zip(tokens, segments) if s == 1 and t != SEP_TOKEN]
            words_a.append(a or [unk])
            words_b.append(b)

        has_pair = any(segment_lists[i] and max(segment_lists[i]) == 1 for i in range(len(segment_lists)))
        encoded = self.hf_tokenizer(
            words_a,
            words_b if has_pair else None,
            is_split_into_words=True,
            truncation='only_second' if has_pair else True,
            max_length=self._max_length,
            padding=True,
            return_tensors='pt'
        )
        device = next(self.model.parameters()).device
        hidden = self.model(**{k: v.to(device) for k, v in encoded.items()}).last_hidden_state

        batch_size = len(token_lists)
        width = max(len(tokens) for tokens in token_lists)
        states = hidden.new_zeros((batch_size, width, hidden.size(-1)))
        mask = torch.zeros((batch_size, width), dtype=torch.bool, device=hidden.device)

        for i, (tokens, segments) in enumerate(zip(token_lists, segment_lists)):
            word_ids = encoded.word_ids(i)
            sequence_ids = encoded.sequence_ids(i)
            specials = [p for p, w in enumerate(word_ids) if w is None and encoded['attention_mask'][i, p]]

            a_index = b_index = 0
            sep_seen = 0
            for position, (token, segment) in enumerate(zip(tokens, segments)):
                if token == CLS_TOKEN:
                    states[i, position] = hidden[i, 0]
                elif token == SEP_TOKEN:
                    sep_seen += 1
                    # 第n个[SEP]对应第n+1个特殊词元 (第一个是句首)
                    special = specials[min(sep_seen, len(specials) - 1)]
                    states[i, position] = hidden[i, special]
                else:
                    sequence = segment
                    word = a_index if segment == 0 else b_index
                    pieces = [p for p, (w, s) in enumerate(zip(word_ids, sequence_ids))
                              if w == word and s == sequence]
                    if pieces:
                        states[i, position] = hidden[i, pieces].mean(dim=0)
                    if segment == 0:
                        a_index += 1
                    else:
                        b_index += 1
                mask[i, position] = True

        return states, mask, hidden[:, 0, :]

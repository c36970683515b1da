"""
文本编码器接口与哈希编码器
encode(text) -> (池化向量, 逐词元向量); encode_pair(a, b) -> [CLS] a [SEP] b [SEP]
"""

import hashlib
import logging
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .tokenization import EMPTY_TOKEN, SPECIAL_TOKENS, basic_tokenize, build_pair_tokens

logger = logging.getLogger(__name__)


@dataclass
class EncodedText:
    """
    编码结果

    Attributes:
        pooled: 池化向量, 形状 (d,)
        token_states: 逐词元向量, 形状 (T, d)
        tokens: 与token_states一一对应的词元 (含哨兵)
        b_start: 序列对编码时第二序列的起始位置, 单序列为None
    """
    pooled: np.ndarray
    token_states: np.ndarray
    tokens: List[str] = field(default_factory=list)
    b_start: Optional[int] = None

    def __post_init__(self):
        if self.token_states.ndim != 2 or self.pooled.shape != (self.token_states.shape[1],):
            raise ValueError(
                f"Inconsistent shapes: pooled {self.pooled.shape}, token_states {self.token_states.shape}"
            )
        if self.tokens and len(self.tokens) != self.token_states.shape[0]:
            raise ValueError(f"{len(self.tokens)} tokens for {self.token_states.shape[0]} states")
        if not (np.isfinite(self.pooled).all() and np.isfinite(self.token_states).all()):
            raise ValueError("Encoder produced non-finite values")

    @property
    def dim(self) -> int:
        return self.pooled.shape[0]


class TextEncoder(ABC):
    """
    文本编码器接口

    实现类: HashEncoder (确定性, 用于段落过滤和测试), TinyEncoder (可训练),
    PretrainedEncoder (预训练模型适配器)
    """

    # 推理调用能否在多线程中并发; 为False时由调用方串行化
    thread_safe: bool = True

    @property
    @abstractmethod
    def dim(self) -> int:
        """向量维度d"""

    @property
    def max_length(self) -> int:
        return 512

    def tokenize(self, text: str) -> List[str]:
        """小写 + 空白/标点切分"""
        return basic_tokenize(text)

    def count_tokens(self, text: str) -> int:
        return len(self.tokenize(text))

    def encode(self, text: str) -> EncodedText:
        """
        编码单个文本

        空文本编码为单个[EMPTY]哨兵; 超长文本从右侧截断

        Returns:
            EncodedText对象
        """
        tokens = self.tokenize(text) or [EMPTY_TOKEN]
        if len(tokens) > self.max_length:
            logger.warning(f"Text of {len(tokens)} tokens truncated to {self.max_length}")
            tokens = tokens[:self.max_length]
        states = self._encode_tokens(tokens, [0] * len(tokens))
        return EncodedText(pooled=self._pool(states), token_states=states, tokens=tokens)

    def encode_pair(self, seq_a: str, seq_b: str) -> EncodedText:
        """
        编码序列对 [CLS] a [SEP] b [SEP]

        超长时截断b的右侧, 不截断a; 池化向量取[CLS]位置的状态
        """
        tokens, segments, b_start = build_pair_tokens(
            self.tokenize(seq_a), self.tokenize(seq_b), self.max_length
        )
        states = self._encode_tokens(tokens, segments)
        return EncodedText(pooled=states[0].copy(), token_states=states, tokens=tokens, b_start=b_start)

    def _pool(self, states: np.ndarray) -> np.ndarray:
        return states.mean(axis=0)

    @abstractmethod
    def _encode_tokens(self, tokens: List[str], segments: List[int]) -> np.ndarray:
        """把词元序列编码为 (T, d) 矩阵"""


class HashEncoder(TextEncoder):
    """
    确定性哈希编码器

    每个词元表示为字符n-gram的带符号哈希袋 (L2归一化), 不依赖上下文;
    相同输入在任何进程中得到相同向量
    """

    def __init__(self, dim: int = 256, seed: int = 13, ngram_min: int = 3, ngram_max: int = 5,
                 max_length: int = 512):
        """
        初始化哈希编码器

        Args:
            dim: 向量维度
            seed: 哈希种子
            ngram_min: 最小字符n-gram长度
            ngram_max: 最大字符n-gram长度
            max_length: 最大词元数
        """
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        if not 1 <= ngram_min <= ngram_max:
            raise ValueError(f"invalid n-gram range ({ngram_min}, {ngram_max})")

        self._dim = dim
        self.seed = seed
        self.ngram_min = ngram_min
        self.ngram_max = ngram_max
        self._max_length = max_length
        self._cache: Dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def max_length(self) -> int:
        return self._max_length

    def _features(self, token: str) -> List[str]:
        if token in SPECIAL_TOKENS:
            return [token]
        padded = f"<{token}>"
        grams = []
        for n in range(self.ngram_min, self.ngram_max + 1):
            grams.extend(padded[i:i + n] for i in range(max(1, len(padded) - n + 1)))
        return grams

    def token_vector(self, token: str) -> np.ndarray:
        """单个词元的哈希向量"""
        cached = self._cache.get(token)
        if cached is not None:
            return cached

        vector = np.zeros(self._dim, dtype=np.float64)
        for gram in self._features(token):
            digest = hashlib.blake2b(
                gram.encode('utf-8'), digest_size=8, key=str(self.seed).encode('utf-8')
            ).digest()
            value = int.from_bytes(digest, 'little')
            sign = 1.0 if (value >> 63) & 1 else -1.0
            vector[value % self._dim] += sign

        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        vector.setflags(write=False)

        with self._lock:
            self._cache[token] = vector
        return vector

    def _encode_tokens(self, tokens: List[str], segments: List[int]) -> np.ndarray:
        return np.stack([self.token_vector(token) for token in tokens])


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """余弦相似度; 任一向量为零时返回0"""
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        return 0.0
    return float(np.dot(a, b) / denom)



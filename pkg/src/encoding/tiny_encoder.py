"""
小型可训练Transformer编码器
用于桌面规模的训练实验; 词表为从语料学习的字节对编码单元
"""

import logging
from typing import Any, Dict, Iterable, List, Optional, Tuple

import torch
from torch import nn
from torch.nn.utils.rnn import pad_sequence
from tokenizers import Tokenizer, models, pre_tokenizers, trainers

from .backbone import TrainableEncoder
from .tokenization import SPECIAL_TOKENS, UNK_TOKEN, basic_tokenize
from ..models.data_schema import HybridCorpus

logger = logging.getLogger(__name__)


class BpeVocabulary:
    """
    字节对编码词表

    每个词元 (basic_tokenize的输出) 切成若干BPE单元, 编码器对单元嵌入取均值,
    因此逐词元状态与分词结果保持一一对应
    """

    def __init__(self, tokenizer: Tokenizer):
        self._tokenizer = tokenizer
        self._cache: Dict[str, List[int]] = {}
        self.unk_id = tokenizer.token_to_id(UNK_TOKEN)

    @classmethod
    def train(cls, texts: Iterable[str], vocab_size: int = 8000, min_frequency: int = 1) -> 'BpeVocabulary':
        """
        从文本学习BPE词表

        Args:
            texts: 训练文本
            vocab_size: 目标词表大小
            min_frequency: 合并的最小频次

        Returns:
            BpeVocabulary对象
        """
        tokenizer = Tokenizer(models.BPE(unk_token=UNK_TOKEN))
        tokenizer.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
        trainer = trainers.BpeTrainer(
            vocab_size=vocab_size,
            min_frequency=min_frequency,
            special_tokens=SPECIAL_TOKENS,
            show_progress=False
        )
        tokenizer.train_from_iterator((" ".join(basic_tokenize(text)) for text in texts), trainer=trainer)

        vocab = cls(tokenizer)
        logger.info(f"Learned BPE vocabulary of {vocab.size} units")
        return vocab

    @classmethod
    def from_corpus(cls, corpus: HybridCorpus, vocab_size: int = 8000) -> 'BpeVocabulary':
        """从语料的表头、单元格、问题和段落学习词表"""
        return cls.train(corpus_texts(corpus), vocab_size=vocab_size)

    @classmethod
    def from_str(cls, payload: str) -> 'BpeVocabulary':
        return cls(Tokenizer.from_str(payload))

    def to_str(self) -> str:
        return self._tokenizer.to_str()

    @property
    def size(self) -> int:
        return self._tokenizer.get_vocab_size()

    def piece_ids(self, token: str) -> List[int]:
        """词元的BPE单元ID; 哨兵词元是单个单元"""
        cached = self._cache.get(token)
        if cached is not None:
            return cached

        if token in SPECIAL_TOKENS:
            ids = [self._tokenizer.token_to_id(token)]
        else:
            ids = self._tokenizer.encode(token).ids or [self.unk_id]
        self._cache[token] = ids
        return ids


def corpus_texts(corpus: HybridCorpus) -> Iterable[str]:
    """遍历语料中所有文本"""
    for table in corpus.tables.values():
        yield " ".join(table.headers)
        for row in table.rows:
            yield " ".join(cell.text for cell in row)
    for passage in corpus.passages.values():
        yield passage.title
        yield from passage.sentences
    for example in corpus.examples:
        yield example.question


class TinyTransformer(nn.Module):
    """词元嵌入 (BPE单元均值) + 位置/段落嵌入 + Transformer编码层"""

    def __init__(self, vocab_size: int, dim: int, n_layers: int, n_heads: int,
                 max_length: int, dropout: float):
        super().__init__()
        self.piece_embeddings = nn.EmbeddingBag(vocab_size, dim, mode='mean')
        self.position_embeddings = nn.Embedding(max_length, dim)
        self.segment_embeddings = nn.Embedding(2, dim)
        self.norm = nn.LayerNorm(dim)
        self.dropout = nn.Dropout(dropout)

        layer = nn.TransformerEncoderLayer(
            d_model=dim,
            nhead=n_heads,
            dim_feedforward=4 * dim,
            dropout=dropout,
            activation='gelu',
            batch_first=True
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=n_layers, enable_nested_tensor=False)

    def forward(self, words: torch.Tensor, segments: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(words.size(1), device=words.device)
        x = words + self.position_embeddings(positions)[None, :, :] + self.segment_embeddings(segments)
        x = self.dropout(self.norm(x))
        return self.encoder(x, src_key_padding_mask=~mask)


class TinyEncoder(TrainableEncoder):
    """
    小型编码器: 2层, d=64

    encode(text)的池化向量是逐词元状态的均值; encode_pair取[CLS]状态
    """

    kind = "tiny"
    # 推理在eval模式和no_grad下只读参数
    thread_safe = True

    def __init__(self, vocab: BpeVocabulary, dim: int = 64, n_layers: int = 2, n_heads: int = 4,
                 max_length: int = 512, dropout: float = 0.1, seed: int = 13):
        if dim % n_heads != 0:
            raise ValueError(f"dim {dim} is not divisible by n_heads {n_heads}")

        self.vocab = vocab
        self._dim = dim
        self.n_layers = n_layers
        self.n_heads = n_heads
        self._max_length = max_length
        self.dropout = dropout
        self.seed = seed

        # 参数初始化只消耗局部随机状态
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.network = TinyTransformer(vocab.size, dim, n_layers, n_heads, max_length, dropout)
        self.network.eval()

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def max_length(self) -> int:
        return self._max_length

    @property
    def module(self) -> nn.Module:
        return self.network

    def config(self) -> Dict[str, Any]:
        return {
            'dim': self._dim,
            'n_layers': self.n_layers,
            'n_heads': self.n_heads,
            'max_length': self._max_length,
            'dropout': self.dropout,
            'seed': self.seed,
        }

    def vocab_payload(self) -> Optional[str]:
        return self.vocab.to_str()

    @classmethod
    def from_config(cls, vocab: BpeVocabulary, config: Dict[str, Any]) -> 'TinyEncoder':
        return cls(vocab, **config)

    def _forward(
        self,
        token_lists: List[List[str]],
        segment_lists: List[List[int]]
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        device = self.device

        piece_ids: List[int] = []
        offsets: List[int] = []
        lengths: List[int] = []
        for tokens in token_lists:
            for token in tokens:
                offsets.append(len(piece_ids))
                piece_ids.extend(self.vocab.piece_ids(token))
            lengths.append(len(tokens))

        words = self.network.piece_embeddings(
            torch.tensor(piece_ids, dtype=torch.long, device=device),
            torch.tensor(offsets, dtype=torch.long, device=device)
        )
        padded = pad_sequence(list(torch.split(words, lengths)), batch_first=True)
        segments = pad_sequence(
            [torch.tensor(s, dtype=torch.long, device=device) for s in segment_lists],
            batch_first=True
        )
        mask = torch.arange(padded.size(1), device=device)[None, :] < torch.tensor(lengths, device=device)[:, None]

        return self.network(padded, segments, mask), mask

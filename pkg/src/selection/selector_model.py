"""
单元格选择模型
行/列各自作为 (问题, 行/列序列) 的二分类, 共享编码器, 并带表格-问题对齐辅助头
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import torch
from torch import nn

from .alignment_head import AlignmentHead, header_spans
from .cell_scorer import combine_scores
from .serializer import serialize_column, serialize_row
from ..encoding.backbone import TrainableEncoder
from ..encoding.checkpoint import encoder_from_checkpoint, load_checkpoint, save_checkpoint
from ..models.data_schema import CellCoord, CellScoreSheet, ExpandedCell, Table

logger = logging.getLogger(__name__)

ExpandedMap = Optional[Dict[CellCoord, ExpandedCell]]


class SelectorModel(nn.Module):
    """
    行列交叉选择器

    给一个表格打分只需N+M次序列对分类; pair_classifications记录累计分类次数
    """

    def __init__(self, encoder: TrainableEncoder, seed: int = 13):
        super().__init__()
        self.encoder = encoder
        self.backbone = encoder.module

        dim = encoder.dim
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            self.row_head = nn.Linear(dim, 1)
            self.col_head = nn.Linear(dim, 1)
        self.align_head = AlignmentHead(dim)

        self.pair_classifications = 0

    def _pair_logits(self, question: str, sequences: List[str], head: nn.Linear) -> torch.Tensor:
        batch = self.encoder.encode_pairs([(question, sequence) for sequence in sequences])
        self.pair_classifications += len(sequences)
        return head(batch.pooled).squeeze(-1)

    def row_logits(self, question: str, table: Table, expanded: ExpandedMap = None) -> torch.Tensor:
        """N个行logit"""
        rows = [serialize_row(table, i, expanded) for i in range(table.n_rows)]
        return self._pair_logits(question, rows, self.row_head)

    def column_logits(self, question: str, table: Table, expanded: ExpandedMap = None) -> torch.Tensor:
        """M个列logit"""
        columns = [serialize_column(table, j, expanded) for j in range(table.n_cols)]
        return self._pair_logits(question, columns, self.col_head)

    def align_logits(self, question: str, headers: Sequence[str]) -> torch.Tensor:
        """
        M个对齐logit

        问题和表头伪句各编码一次; h_q为问题词元均值, h_c_j为第j个表头的词元均值
        """
        spans = header_spans(headers, self.encoder)
        if spans[-1][1] > self.encoder.max_length:
            raise ValueError(f"Header pseudo sentence of {spans[-1][1]} tokens exceeds the encoder limit")

        header_tokens: List[str] = []
        for header in headers:
            header_tokens.extend(self.encoder.tokenize(header) or [header])

        batch = self.encoder.encode_sequences([self.encoder.tokenize(question), header_tokens])
        h_q = batch.states[0, :len(batch.tokens[0])].mean(dim=0)
        h_c = torch.stack([batch.states[1, start:end].mean(dim=0) for start, end in spans])
        return self.align_head(h_q[None, :] * h_c)

    def score_rows(self, question: str, table: Table, expanded: ExpandedMap = None) -> List[float]:
        """每行包含答案的概率"""
        with torch.no_grad():
            return torch.sigmoid(self.row_logits(question, table, expanded)).double().tolist()

    def score_columns(self, question: str, table: Table, expanded: ExpandedMap = None) -> List[float]:
        """每列包含答案的概率"""
        with torch.no_grad():
            return torch.sigmoid(self.column_logits(question, table, expanded)).double().tolist()

    def align_relevance(self, question: str, headers: Sequence[str]) -> List[float]:
        """训练后的对齐头给出的每列相关度"""
        with torch.no_grad():
            return torch.sigmoid(self.align_logits(question, headers)).double().tolist()

    def score_table(self, question: str, table: Table, expanded: ExpandedMap = None) -> CellScoreSheet:
        """N+M次分类后合并为单元格打分表"""
        return combine_scores(
            self.score_rows(question, table, expanded),
            self.score_columns(question, table, expanded)
        )

    def save(self, path: Union[str, Path], extra: Optional[dict] = None) -> Path:
        return save_checkpoint(path, 'selector', self.encoder, self.state_dict(), extra)


def load_selector(path: Union[str, Path]) -> SelectorModel:
    """从检查点恢复选择器 (eval模式)"""
    payload = load_checkpoint(path, expected_kind='selector')
    model = SelectorModel(encoder_from_checkpoint(payload))
    model.load_state_dict(payload['state_dict'])
    model.eval()
    return model

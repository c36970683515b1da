"""
混合表格-文本问答数据模型定义
使用Pydantic进行类型验证和数据管理
"""

import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


CellCoord = Tuple[int, int]


class AnswerSource(str, Enum):
    """答案来源枚举

    HybridQA的答案来源划分:
        - IN_TABLE: 答案是单元格的值
        - IN_PASSAGE: 答案在单元格链接的段落中
        - COMPUTE: 需要跨单元格数值计算 (不在本系统范围内)
        - UNKNOWN: 数据未标注来源 (如WTQ)
    """
    IN_TABLE = "in_table"
    IN_PASSAGE = "in_passage"
    COMPUTE = "compute"
    UNKNOWN = "unknown"


class LinkSource(str, Enum):
    """列对齐标签的来源"""
    NAME_LINK = "name_link"  # 列名出现在问题中
    VALUE_LINK = "value_link"  # 列中某个值出现在问题中
    GOLD_CELL_COLUMN = "gold_cell_column"  # 金标单元格所在列
    BRIDGE_COLUMN = "bridge_column"  # 桥接实体所在列


class BridgeMatch(str, Enum):
    """桥接实体匹配方式"""
    TITLE_EXACT = "title_exact"
    TITLE_NORMALIZED = "title_normalized"


class ErrorCategory(str, Enum):
    """单元格选择错误类别"""
    CORRECT = "correct"
    SAME_COL_WRONG_ROW = "same_col_wrong_row"
    SAME_ROW_WRONG_COL = "same_row_wrong_col"
    BOTH_WRONG = "both_wrong"
    NUMERIC_REQUIRED = "numeric_required"


# ========== 知识源 ==========

class Passage(BaseModel):
    """
    链接段落
    单元格通过passage_id引用段落
    """
    model_config = ConfigDict(frozen=True)

    passage_id: str = Field(min_length=1)
    title: str = Field(default="", description="段落标题 (通常是实体名)")
    sentences: List[str] = Field(description="已切分的句子")

    @field_validator('sentences')
    @classmethod
    def validate_sentences(cls, v):
        """句子列表不能为空"""
        if not v:
            raise ValueError('Passage must contain at least one sentence')
        return v

    @property
    def text(self) -> str:
        return " ".join(self.sentences)


class Cell(BaseModel):
    """表格单元格 c_{i,j}"""
    model_config = ConfigDict(frozen=True)

    row: int = Field(ge=0)
    col: int = Field(ge=0)
    text: str = Field(default="")
    passage_ids: List[str] = Field(default_factory=list, description="链接段落ID")

    @property
    def coord(self) -> CellCoord:
        return (self.row, self.col)


class Table(BaseModel):
    """
    表格 T
    N行M列, 每列有一个表头
    """
    model_config = ConfigDict(frozen=True)

    table_id: str = Field(min_length=1)
    headers: List[str]
    rows: List[List[Cell]]

    @model_validator(mode='after')
    def validate_shape(self):
        """验证表格为矩形且单元格坐标与位置一致"""
        if not self.headers:
            raise ValueError(f'Table {self.table_id}: at least one header required')
        for j, header in enumerate(self.headers):
            if not header or not header.strip():
                raise ValueError(f'Table {self.table_id}: header {j} is empty')
        if not self.rows:
            raise ValueError(f'Table {self.table_id}: at least one row required')

        width = len(self.headers)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(
                    f'Table {self.table_id}: row {i} has {len(row)} cells, '
                    f'expected {width}'
                )
            for j, cell in enumerate(row):
                if cell.coord != (i, j):
                    raise ValueError(
                        f'Table {self.table_id}: cell at ({i}, {j}) '
                        f'claims coordinates {cell.coord}'
                    )
        return self

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.headers)

    def cell(self, row: int, col: int) -> Cell:
        return self.rows[row][col]

    def column(self, col: int) -> List[Cell]:
        return [row[col] for row in self.rows]

    def iter_cells(self):
        """按行优先顺序遍历所有单元格"""
        for row in self.rows:
            yield from row

    @classmethod
    def from_matrix(
        cls,
        table_id: str,
        headers: List[str],
        texts: List[List[str]],
        links: Optional[List[List[List[str]]]] = None
    ) -> 'Table':
        """
        从文本矩阵构造表格

        Args:
            table_id: 表格ID
            headers: 表头列表
            texts: 单元格文本矩阵
            links: 每个单元格的链接段落ID (可选, 与texts同形)

        Returns:
            Table对象
        """
        rows = []
        for i, row_texts in enumerate(texts):
            row = []
            for j, text in enumerate(row_texts):
                cell_links = []
                if links is not None and i < len(links) and j < len(links[i]):
                    cell_links = list(links[i][j] or [])
                row.append(Cell(row=i, col=j, text=str(text), passage_ids=cell_links))
            rows.append(row)
        return cls(table_id=table_id, headers=list(headers), rows=rows)


class QAExample(BaseModel):
    """
    问答样本
    问题Q, 答案α, 可选的金标单元格坐标
    """
    model_config = ConfigDict(frozen=True)

    question_id: str = Field(min_length=1)
    table_id: str = Field(min_length=1)
    question: str
    answer_text: str = Field(default="")
    gold_cell: Optional[CellCoord] = Field(default=None)
    source: AnswerSource = Field(default=AnswerSource.UNKNOWN)


class HybridCorpus(BaseModel):
    """
    统一语料容器
    包含一个数据划分所需的表格、段落和样本
    """
    model_config = ConfigDict(frozen=True)

    tables: Dict[str, Table] = Field(default_factory=dict)
    passages: Dict[str, Passage] = Field(default_factory=dict)
    examples: List[QAExample] = Field(default_factory=list)

    def table_for(self, example: QAExample) -> Table:
        return self.tables[example.table_id]

    @property
    def table_list(self) -> List[Table]:
        return list(self.tables.values())


# ========== 对齐数据 ==========

class BridgeCandidate(BaseModel):
    """桥接实体候选: 文本等于链接段落标题的单元格"""
    model_config = ConfigDict(frozen=True)

    cell: CellCoord
    passage_id: str
    match_kind: BridgeMatch


class AlignmentLabels(BaseModel):
    """
    表格-问题对齐标签 L = {l_1 ... l_M}
    provenance[i]记录第i列被标注为1的所有规则来源
    """
    model_config = ConfigDict(populate_by_name=True)

    table_id: str
    question_id: str = Field(alias="qid")
    labels: List[int]
    provenance: List[List[LinkSource]]

    @model_validator(mode='after')
    def validate_consistency(self):
        """labels[i]=1 当且仅当 provenance[i] 非空"""
        if len(self.labels) != len(self.provenance):
            raise ValueError(
                f'labels ({len(self.labels)}) and provenance '
                f'({len(self.provenance)}) differ in length'
            )
        for i, (label, sources) in enumerate(zip(self.labels, self.provenance)):
            if label not in (0, 1):
                raise ValueError(f'label {i} must be 0 or 1, got {label}')
            if bool(label) != bool(sources):
                raise ValueError(f'label {i} disagrees with its provenance {sources}')
        return self

    @property
    def positive_columns(self) -> List[int]:
        return [i for i, label in enumerate(self.labels) if label == 1]


# ========== 段落过滤 ==========

class AppendedSentence(BaseModel):
    """追加到单元格的段落句子"""
    model_config = ConfigDict(frozen=True)

    passage_id: str
    sentence_index: int = Field(ge=0)
    sentence: str
    similarity: float


class ExpandedCell(BaseModel):
    """
    扩展单元格
    单元格文本 + 按相似度排序的top-k段落句子
    """
    model_config = ConfigDict(frozen=True)

    cell: CellCoord
    base_text: str
    appended_sentences: List[AppendedSentence] = Field(default_factory=list)
    token_count: int = Field(ge=0)

    @field_validator('appended_sentences')
    @classmethod
    def validate_order(cls, v):
        """追加句子必须按相似度降序排列"""
        for prev, curr in zip(v, v[1:]):
            if curr.similarity > prev.similarity:
                raise ValueError('appended sentences must be sorted by descending similarity')
        return v

    @property
    def passage_text(self) -> str:
        return " ".join(s.sentence for s in self.appended_sentences)

    @property
    def text(self) -> str:
        """单元格文本加段落文本"""
        if not self.appended_sentences:
            return self.base_text
        return f"{self.base_text} {self.passage_text}".strip()


class ExpansionRecord(BaseModel):
    """一个问题的扩展单元格, 对应expanded文件中的一行JSON"""
    model_config = ConfigDict(populate_by_name=True)

    question_id: str = Field(alias="qid")
    table_id: str
    cells: List[ExpandedCell] = Field(default_factory=list)

    def by_coord(self) -> Dict[CellCoord, ExpandedCell]:
        return {tuple(cell.cell): cell for cell in self.cells}


# ========== 单元格选择 ==========

class RankedCell(BaseModel):
    """排序后的候选单元格"""
    model_config = ConfigDict(frozen=True)

    row: int
    col: int
    score: float

    @property
    def coord(self) -> CellCoord:
        return (self.row, self.col)


class CellScoreSheet(BaseModel):
    """
    单元格打分表
    行概率P_r, 列概率P_c, 单元格分数 = 行概率 + 列概率
    """
    row_probs: List[float]
    col_probs: List[float]
    cell_scores: List[List[float]]
    ranking: List[RankedCell]

    @property
    def n_rows(self) -> int:
        return len(self.row_probs)

    @property
    def n_cols(self) -> int:
        return len(self.col_probs)


class LossBreakdown(BaseModel):
    """
    多任务损失分解
    total = l_row + l_col + sigma * l_align
    """
    l_row: float = Field(ge=0)
    l_col: float = Field(ge=0)
    l_align: float = Field(ge=0)
    sigma: float = Field(ge=0, le=1)
    total: float

    @classmethod
    def combine(cls, l_row: float, l_col: float, l_align: float, sigma: float) -> 'LossBreakdown':
        return cls(
            l_row=l_row,
            l_col=l_col,
            l_align=l_align,
            sigma=sigma,
            total=l_row + l_col + sigma * l_align
        )


# ========== 阅读理解 ==========

class ReaderInstance(BaseModel):
    """
    阅读器训练/推理样本
    正样本带答案span, 负样本的答案为-1 (answer_span为空)
    """
    question_id: str
    question: str
    context: str
    answer_text: str = Field(default="", description="金标答案, 用于干净样本过滤")
    answer_span: Optional[Tuple[int, int]] = Field(default=None, description="上下文词元的起止下标 (闭区间)")
    is_positive: bool = False
    cell: CellCoord
    rank: int = Field(ge=0, description="候选单元格在top-k中的名次 (0开始)")
    cell_score: float = 0.0

    @model_validator(mode='after')
    def validate_span(self):
        """正样本必须有span, 负样本不能有span"""
        if self.is_positive and self.answer_span is None:
            raise ValueError('positive instance requires an answer span')
        if not self.is_positive and self.answer_span is not None:
            raise ValueError('negative instance cannot carry an answer span')
        if self.answer_span is not None and self.answer_span[0] > self.answer_span[1]:
            raise ValueError(f'invalid span {self.answer_span}')
        return self


class SpanPrediction(BaseModel):
    """
    答案片段预测
    start/end为上下文词元下标; 无答案预测使用 -1
    """
    start: int
    end: int
    text: str
    span_score: float
    combined_score: float = 0.0

    @model_validator(mode='after')
    def validate_order(self):
        if self.start > self.end:
            raise ValueError(f'span start {self.start} exceeds end {self.end}')
        return self

    @property
    def is_no_answer(self) -> bool:
        return self.start < 0


class PredictionRecord(BaseModel):
    """
    最终预测记录
    对应输出文件中的一行JSON
    """
    model_config = ConfigDict(populate_by_name=True)

    question_id: str = Field(alias="qid")
    answer: str
    cell: Optional[CellCoord] = None
    row_prob: Optional[float] = None
    col_prob: Optional[float] = None
    span_score: Optional[float] = None
    combined_score: Optional[float] = None


class SelectionRecord(BaseModel):
    """
    单元格选择输出
    对应selections文件中的一行JSON
    """
    model_config = ConfigDict(populate_by_name=True)

    question_id: str = Field(alias="qid")
    table_id: str
    row_probs: List[float]
    col_probs: List[float]
    topk: List[RankedCell]
    ranking: List[RankedCell] = Field(description="完整排序 (N·M个单元格)")

    @classmethod
    def from_sheet(cls, question_id: str, table_id: str, sheet: CellScoreSheet, k: int) -> 'SelectionRecord':
        return cls(
            question_id=question_id,
            table_id=table_id,
            row_probs=sheet.row_probs,
            col_probs=sheet.col_probs,
            topk=sheet.ranking[:k],
            ranking=sheet.ranking
        )

    def to_sheet(self) -> CellScoreSheet:
        """还原打分表 (单元格分数由行列概率重算)"""
        return CellScoreSheet(
            row_probs=self.row_probs,
            col_probs=self.col_probs,
            cell_scores=[[r + c for c in self.col_probs] for r in self.row_probs],
            ranking=self.ranking
        )


class EvalReport(BaseModel):
    """
    评估报告
    所有比率都在[0,1]区间
    """
    em: float = Field(ge=0, le=1)
    f1: float = Field(ge=0, le=1)
    by_source: Dict[str, Dict[str, float]] = Field(default_factory=dict, description="按答案来源的EM/F1")
    hits: Dict[int, float] = Field(default_factory=dict)
    mrr: Optional[float] = Field(default=None, ge=0, le=1)
    row_acc: Optional[float] = Field(default=None, ge=0, le=1)
    col_acc: Optional[float] = Field(default=None, ge=0, le=1)
    n: int = Field(ge=0)

    @field_validator('hits')
    @classmethod
    def validate_hits(cls, v):
        """Hits@k在[0,1]内且随k单调不减"""
        previous = 0.0
        for k in sorted(v):
            value = v[k]
            if not (0.0 <= value <= 1.0) or math.isnan(value):
                raise ValueError(f'Hits@{k} must be within [0, 1], got {value}')
            if value < previous:
                raise ValueError(f'Hits@{k} ({value}) decreases from a smaller k ({previous})')
            previous = value
        return v

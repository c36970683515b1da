"""
合成语料生成器
生成确定性的表格 + 段落 + 问题 (已知金标单元格) 及对齐标签, 用于桌面规模训练和测试
"""

import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Set, Tuple, Union

from ..alignment.label_builder import make_alignment_labels
from ..alignment.schema_linking import STOPWORDS, bridge_at, find_bridge_cells, light_stem
from ..ingestion.corpus_io import write_corpus, write_jsonl
from ..models.data_schema import (
    AlignmentLabels,
    AnswerSource,
    CellCoord,
    HybridCorpus,
    Passage,
    QAExample,
    Table
)

logger = logging.getLogger(__name__)


HEADER_POOL = [
    'Rank', 'Player', 'Team', 'Venue', 'Score', 'Year', 'Coach', 'Region', 'Captain', 'Stadium',
    'Position', 'Country', 'Club', 'League', 'Award', 'Album', 'Label', 'Genre', 'Director', 'Studio',
    'Station', 'Province', 'Mayor', 'Party', 'Engine', 'Builder', 'Route', 'Terminal', 'Species', 'Habitat',
]

ATTRIBUTE_POOL = ['nickname', 'birthplace', 'motto', 'mascot', 'founder', 'hometown', 'emblem', 'anthem']

# 表内问题模板: {H}为答案列表头, {K}为键列表头, {v}为键列的值
IN_TABLE_TEMPLATES = [
    "What is the {H} when the {K} is {v} ?",
    "Which {H} has {K} {v} ?",
    "Tell me the {H} for {v} .",
    "What {H} is listed with {v} ?",
    "For the entry with {v} , what is the {H} ?",
    "Give the {H} whose {K} is {v} .",
]

IN_PASSAGE_TEMPLATE = "What is the {attr} of the {H} whose {K} is {v} ?"
ATTRIBUTE_SENTENCE = "The {attr} of {entity} is {answer} ."

_TEMPLATE_WORDS = {'tell', 'me', 'give', 'listed', 'entry', 'whose'}
_CONSONANTS = 'bdfgklmnprstvz'
_VOWELS = 'aeiou'


@dataclass(frozen=True)
class QuestionSpec:
    """问题约束: 键列取值为key_value的行, 在answer_col列上的单元格"""
    answer_col: int
    key_col: int
    key_value: str


@dataclass
class SyntheticCorpus:
    """合成语料及其对齐标签和问题约束"""
    corpus: HybridCorpus
    labels: List[AlignmentLabels]
    specs: Dict[str, QuestionSpec] = field(default_factory=dict)


class _WordFactory:
    """全局唯一的伪词, 保证不同表格词表不相交"""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: Set[str] = set()
        self.reserved = set(STOPWORDS) | _TEMPLATE_WORDS | set(ATTRIBUTE_POOL)
        self.reserved |= {header.lower() for header in HEADER_POOL}
        self.reserved |= {light_stem(word) for word in list(self.reserved)}

    def word(self) -> str:
        while True:
            n_syllables = self.rng.randint(2, 3)
            candidate = "".join(
                self.rng.choice(_CONSONANTS) + self.rng.choice(_VOWELS) for _ in range(n_syllables)
            )
            if candidate in self.used or candidate in self.reserved or light_stem(candidate) in self.reserved:
                continue
            self.used.add(candidate)
            return candidate

    def entity(self) -> str:
        return f"{self.word().capitalize()} {self.word().capitalize()}"


def _check_range(name: str, bounds: Tuple[int, int], minimum: int):
    low, high = bounds
    if low < minimum or high < low:
        raise ValueError(f"{name} range {bounds} is degenerate (need {minimum} <= min <= max)")


def find_matching_cells(table: Table, spec: QuestionSpec) -> List[CellCoord]:
    """暴力搜索满足问题约束的单元格"""
    return [
        (i, spec.answer_col)
        for i in range(table.n_rows)
        if table.cell(i, spec.key_col).text == spec.key_value
    ]


def generate_corpus(
    n_tables: int = 50,
    rows: Tuple[int, int] = (4, 8),
    cols: Tuple[int, int] = (3, 6),
    seed: int = 13,
    questions_per_table: int = 4
) -> SyntheticCorpus:
    """
    生成合成语料

    第0列是链接到同名段落的实体; 表内问题由一个表头 (答案列) 和一个单元格值 (定位行) 确定;
    段落问题询问实体段落中的属性, 金标单元格是该实体单元格 (桥接实体)

    Args:
        n_tables: 表格数
        rows: 行数范围 (闭区间)
        cols: 列数范围 (闭区间)
        seed: 随机种子
        questions_per_table: 每个表格的问题数, 表内和段落问题交替

    Returns:
        SyntheticCorpus
    """
    if n_tables < 1:
        raise ValueError(f"n_tables must be >= 1, got {n_tables}")
    if questions_per_table < 1:
        raise ValueError(f"questions_per_table must be >= 1, got {questions_per_table}")
    _check_range('rows', rows, 1)
    _check_range('cols', cols, 2)
    if cols[1] > len(HEADER_POOL):
        raise ValueError(f"at most {len(HEADER_POOL)} columns are supported")

    rng = random.Random(seed)
    words = _WordFactory(rng)

    tables: Dict[str, Table] = {}
    passages: Dict[str, Passage] = {}
    examples: List[QAExample] = []
    specs: Dict[str, QuestionSpec] = {}

    for t in range(n_tables):
        table_id = f"syn_{t:04d}"
        n_rows = rng.randint(*rows)
        n_cols = rng.randint(*cols)
        headers = rng.sample(HEADER_POOL, n_cols)

        texts = []
        links = []
        facts = []
        for i in range(n_rows):
            entity = words.entity()
            row = [entity] + [words.word() for _ in range(n_cols - 1)]
            texts.append(row)

            pid = f"{table_id}_p{i}"
            attr = rng.choice(ATTRIBUTE_POOL)
            answer = words.word()
            passages[pid] = Passage(
                passage_id=pid,
                title=entity,
                sentences=[
                    f"{entity} is a {words.word()} from {words.word().capitalize()} .",
                    ATTRIBUTE_SENTENCE.format(attr=attr, entity=entity, answer=answer),
                    f"It was first recorded in {rng.randint(1900, 2020)} .",
                ]
            )
            links.append([[pid]] + [[] for _ in range(n_cols - 1)])
            facts.append((attr, answer))

        table = Table.from_matrix(table_id, headers, texts, links)
        tables[table_id] = table

        used_targets: Set[Tuple[int, int, str]] = set()
        for q in range(questions_per_table):
            in_passage = q % 2 == 1
            for _ in range(20):
                i = rng.randrange(n_rows)
                if in_passage:
                    answer_col = 0
                    key_col = rng.randrange(1, n_cols)
                else:
                    answer_col, key_col = rng.sample(range(n_cols), 2)
                kind = 'passage' if in_passage else 'table'
                if (i, answer_col, kind) not in used_targets:
                    break
            used_targets.add((i, answer_col, kind))

            qid = f"{table_id}_q{q}"
            value = texts[i][key_col]
            if in_passage:
                attr, answer = facts[i]
                question = IN_PASSAGE_TEMPLATE.format(attr=attr, H=headers[0], K=headers[key_col], v=value)
                source = AnswerSource.IN_PASSAGE
            else:
                template = rng.choice(IN_TABLE_TEMPLATES)
                question = template.format(H=headers[answer_col], K=headers[key_col], v=value)
                answer = texts[i][answer_col]
                source = AnswerSource.IN_TABLE

            examples.append(QAExample(
                question_id=qid,
                table_id=table_id,
                question=question,
                answer_text=answer,
                gold_cell=(i, answer_col),
                source=source
            ))
            specs[qid] = QuestionSpec(answer_col=answer_col, key_col=key_col, key_value=value)

    corpus = HybridCorpus(tables=tables, passages=passages, examples=examples)

    labels = []
    bridges = {table_id: find_bridge_cells(table, passages) for table_id, table in tables.items()}
    for example in examples:
        bridge = bridge_at(bridges[example.table_id], example.gold_cell)
        labels.append(make_alignment_labels(example, tables[example.table_id], bridge))

    logger.info(
        f"Generated synthetic corpus: {len(tables)} tables, {len(passages)} passages, {len(examples)} questions"
    )
    return SyntheticCorpus(corpus=corpus, labels=labels, specs=specs)


def write_fixture_corpus(synthetic: SyntheticCorpus, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """
    写出合成语料

    Returns:
        (corpus.json路径, alignment.jsonl路径)
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_path = write_corpus(synthetic.corpus, out_dir / 'corpus.json')
    labels_path = out_dir / 'alignment.jsonl'
    write_jsonl(synthetic.labels, labels_path, by_alias=True)
    return corpus_path, labels_path

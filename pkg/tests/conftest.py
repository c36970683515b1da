"""
共享测试夹具

- 橄榄球冲球码数表 (双列推理示例: 排名 + 球员 -> 球员段落)
- 运动员表 (只有列名链接的示例)
- 小型合成语料和小型编码器
"""

import sys
from pathlib import Path

import pytest

# 添加项目路径
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.encoding.text_encoder import HashEncoder
from src.encoding.tiny_encoder import BpeVocabulary, TinyEncoder
from src.fixtures.synthetic import generate_corpus
from src.models.data_schema import AnswerSource, HybridCorpus, Passage, QAExample, Table

RUSHING_HEADERS = ['Rank', 'Player', 'Team(s) by season', 'Carries', 'Yards', 'Average']
RUSHING_QUESTION = (
    "What is the middle name of the player with the second most "
    "National Football League career rushing yards ?"
)
ATHLETE_HEADERS = ['Year', 'Score', 'Athlete', 'Place']
ATHLETE_QUESTION = "Who is the athlete in a city located on the Mississippi River ?"


@pytest.fixture
def rushing_passages():
    return {
        '/wiki/Emmitt_Smith': Passage(
            passage_id='/wiki/Emmitt_Smith',
            title='Emmitt Smith',
            sentences=[
                "Emmitt James Smith III is a former running back .",
                "He played 13 seasons with the Dallas Cowboys .",
            ]
        ),
        '/wiki/Walter_Payton': Passage(
            passage_id='/wiki/Walter_Payton',
            title='Walter Payton',
            sentences=[
                "Walter Jerry Payton was an American professional football player .",
                "He played for the Chicago Bears for 13 seasons .",
                "Payton was known by the nickname Sweetness .",
            ]
        ),
        '/wiki/Chicago_Bears': Passage(
            passage_id='/wiki/Chicago_Bears',
            title='Chicago Bears',
            sentences=["The Chicago Bears are a professional football team based in Chicago ."]
        ),
    }


@pytest.fixture
def rushing_table():
    """排名列只有1/2/3, 只有排名列含 "2" """
    texts = [
        ['1', 'Emmitt Smith', 'Dallas Cowboys', '4409', '18355', '4.2'],
        ['2', 'Walter Payton', 'Chicago Bears', '3838', '16726', '4.4'],
        ['3', 'Frank Gore', 'San Francisco 49ers', '3735', '16000', '4.3'],
    ]
    links = [
        [[], ['/wiki/Emmitt_Smith'], [], [], [], []],
        [[], ['/wiki/Walter_Payton'], ['/wiki/Chicago_Bears'], [], [], []],
        [[], [], [], [], [], []],
    ]
    return Table.from_matrix('rushing', RUSHING_HEADERS, texts, links)


@pytest.fixture
def rushing_example():
    return QAExample(
        question_id='rushing_q0',
        table_id='rushing',
        question=RUSHING_QUESTION,
        answer_text='Jerry',
        gold_cell=(1, 1),
        source=AnswerSource.IN_PASSAGE
    )


@pytest.fixture
def rushing_corpus(rushing_table, rushing_passages, rushing_example):
    return HybridCorpus(
        tables={rushing_table.table_id: rushing_table},
        passages=rushing_passages,
        examples=[rushing_example]
    )


@pytest.fixture
def athlete_table():
    texts = [
        ['1994', '8.5', 'Ann Lee', 'Minneapolis'],
        ['1995', '9.1', 'Bo Chan', 'Denver'],
        ['1996', '8.7', 'Cy Diaz', 'Boston'],
    ]
    return Table.from_matrix('athletes', ATHLETE_HEADERS, texts)


@pytest.fixture(scope='session')
def small_synthetic():
    return generate_corpus(n_tables=6, rows=(3, 4), cols=(3, 4), seed=13, questions_per_table=2)


@pytest.fixture
def hash_encoder():
    return HashEncoder(dim=64, seed=13)


@pytest.fixture(scope='session')
def small_vocab(small_synthetic):
    return BpeVocabulary.from_corpus(small_synthetic.corpus, vocab_size=300)


def make_tiny_encoder(vocab: BpeVocabulary, dim: int = 16, n_heads: int = 2, seed: int = 13) -> TinyEncoder:
    return TinyEncoder(vocab, dim=dim, n_layers=1, n_heads=n_heads, max_length=128, dropout=0.0, seed=seed)


@pytest.fixture
def tiny_encoder(small_vocab):
    return make_tiny_encoder(small_vocab)


@pytest.fixture
def clean_hqa_env(monkeypatch):
    """清除可能影响配置加载的 HQA_ 环境变量"""
    import os
    for name in list(os.environ):
        if name.startswith('HQA_'):
            monkeypatch.delenv(name, raising=False)
    return monkeypatch

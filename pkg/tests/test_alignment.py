"""
对齐标签生成测试
列名链接、值链接、桥接实体和标签合并
"""

import json

import pytest

from conftest import ATHLETE_QUESTION, RUSHING_HEADERS, RUSHING_QUESTION
from src.alignment.label_builder import (
    build_alignment_dataset,
    label_coverage,
    make_alignment_labels,
    read_generated_questions
)
from src.alignment.schema_linking import (
    bridge_at,
    content_tokens,
    find_bridge_cells,
    light_stem,
    name_based_links,
    normalize_value_tokens,
    value_based_links
)
from src.models.data_schema import BridgeMatch, LinkSource, Passage, QAExample, Table
from src.validation.errors import CorpusParseError, CorpusValidationError


# ========== 列名链接 ==========

def test_name_links_rushing_question():
    """Player和Yards出现在问题中 (yards -> yard 词干)"""
    assert name_based_links(RUSHING_QUESTION, RUSHING_HEADERS) == {1, 4}


def test_name_links_athlete_question(athlete_table):
    assert name_based_links(ATHLETE_QUESTION, athlete_table.headers) == {2}


def test_name_links_no_overlap():
    assert name_based_links("Where is the stadium ?", ['Rank', 'Player']) == set()


def test_name_links_require_headers():
    with pytest.raises(ValueError):
        name_based_links(RUSHING_QUESTION, [])


def test_name_links_case_invariant(athlete_table):
    assert name_based_links(RUSHING_QUESTION.upper(), RUSHING_HEADERS) == {1, 4}
    assert name_based_links(ATHLETE_QUESTION.upper(), athlete_table.headers) == {2}


def test_name_links_monotone_when_header_appended():
    """追加一个出现在问题中的表头不会删除已有链接"""
    extended = RUSHING_HEADERS + ['Career']
    links = name_based_links(RUSHING_QUESTION, extended)
    assert links == {1, 4, 6}


def test_light_stem():
    assert light_stem('yards') == 'yard'
    assert light_stem('classes') == 'class'
    assert light_stem('glass') == 'glass'
    assert light_stem('bus') == 'bus'


def test_content_tokens_drop_stopwords_and_punctuation():
    assert content_tokens("Team(s) by season") == ['team', 'season']


# ========== 值链接 ==========

def test_value_link_via_ordinal_word(rushing_table):
    """"the second most" 归一化为 "the 2 most", 命中Rank列的 "2" """
    assert value_based_links(RUSHING_QUESTION, rushing_table) == {0}


def test_value_link_direct_match(athlete_table):
    assert value_based_links("Who won in 1994 ?", athlete_table) == {0}


def test_value_link_none(athlete_table):
    assert value_based_links("Who won the most medals ?", athlete_table) == set()


def test_value_link_case_invariant(rushing_table):
    assert value_based_links(RUSHING_QUESTION.upper(), rushing_table) == {0}


def test_ordinal_suffix_normalization():
    assert normalize_value_tokens("the 2nd and 21st place") == ['the', '2', 'and', '21', 'place']
    assert normalize_value_tokens("Third") == ['3']


def test_value_link_ignores_stopword_cells():
    table = Table.from_matrix('t', ['Note', 'Name'], [['the', 'Ann'], ['of', 'Bo']])
    assert value_based_links("Which of the names is Bo ?", table) == {1}


# ========== 桥接实体 ==========

def test_bridge_exact_title(rushing_table, rushing_passages):
    candidates = find_bridge_cells(rushing_table, rushing_passages)

    coords = [candidate.cell for candidate in candidates]
    assert coords == [(0, 1), (1, 1), (1, 2)], "按行优先顺序返回"
    payton = bridge_at(candidates, (1, 1))
    assert payton.passage_id == '/wiki/Walter_Payton'
    assert payton.match_kind == BridgeMatch.TITLE_EXACT


def test_bridge_normalized_title():
    passages = {'p': Passage(passage_id='p', title='Walter Payton', sentences=['x .'])}
    table = Table.from_matrix('t', ['Player'], [['walter payton']], [[['p']]])

    candidates = find_bridge_cells(table, passages)
    assert len(candidates) == 1
    assert candidates[0].match_kind == BridgeMatch.TITLE_NORMALIZED


def test_bridge_without_links(athlete_table):
    assert find_bridge_cells(athlete_table, {}) == []
    assert bridge_at([], (0, 0)) is None
    assert bridge_at([], None) is None


# ========== 标签合并 ==========

def test_union_labels_rushing(rushing_table, rushing_passages, rushing_example):
    bridge = bridge_at(find_bridge_cells(rushing_table, rushing_passages), rushing_example.gold_cell)
    labels = make_alignment_labels(rushing_example, rushing_table, bridge)

    assert labels.labels == [1, 1, 0, 0, 1, 0], "Rank/Player/Yards三列为1"
    assert labels.provenance[0] == [LinkSource.VALUE_LINK]
    assert labels.provenance[1] == [
        LinkSource.NAME_LINK, LinkSource.GOLD_CELL_COLUMN, LinkSource.BRIDGE_COLUMN
    ]
    assert labels.provenance[4] == [LinkSource.NAME_LINK]
    assert labels.positive_columns == [0, 1, 4]


def test_no_rule_fires(athlete_table):
    example = QAExample(question_id='q', table_id='athletes', question="Hello there ?", answer_text='x')
    labels = make_alignment_labels(example, athlete_table)
    assert labels.labels == [0, 0, 0, 0]
    assert all(not sources for sources in labels.provenance)


def test_gold_cell_only(athlete_table):
    example = QAExample(
        question_id='q', table_id='athletes', question="Hello there ?", answer_text='Denver', gold_cell=(1, 3)
    )
    labels = make_alignment_labels(example, athlete_table)
    assert labels.labels == [0, 0, 0, 1]


def test_labels_reject_foreign_table(rushing_example, athlete_table):
    with pytest.raises(ValueError):
        make_alignment_labels(rushing_example, athlete_table)


def test_labels_deterministic(rushing_corpus):
    assert build_alignment_dataset(rushing_corpus) == build_alignment_dataset(rushing_corpus)


def test_build_dataset_uses_bridge_at_gold_cell(rushing_corpus):
    (labels,) = build_alignment_dataset(rushing_corpus)
    assert LinkSource.BRIDGE_COLUMN in labels.provenance[1]
    assert labels.question_id == 'rushing_q0'


def test_label_coverage(small_synthetic):
    coverage = label_coverage(small_synthetic.labels)

    assert list(coverage['source']) == [source.value for source in LinkSource]
    gold = coverage.set_index('source').loc['gold_cell_column']
    assert gold['example_coverage'] == 1.0, "每个合成问题都有金标列"
    assert coverage['example_coverage'].between(0, 1).all()
    assert coverage.attrs['mean_positive_columns'] >= 1.0


def test_label_coverage_empty():
    coverage = label_coverage([])
    assert (coverage['example_coverage'] == 0).all()


# ========== 外部生成的问题 ==========

def test_read_generated_questions(tmp_path, rushing_table):
    path = tmp_path / 'generated.jsonl'
    records = [
        {'qid': 'g1', 'table_id': 'rushing', 'question': RUSHING_QUESTION, 'answer': 'Jerry',
         'source': 'in_passage', 'gold_cell': [1, 1],
         'bridge': {'cell': [1, 1], 'passage_id': '/wiki/Walter_Payton'}},
        {'qid': 'g2', 'table_id': 'rushing', 'question': 'Who ranks 3 ?', 'answer': 'Frank Gore',
         'source': 'in_table', 'gold_cell': [2, 1]},
    ]
    path.write_text("\n".join(json.dumps(record) for record in records) + "\n", encoding='utf-8')

    results = read_generated_questions(path, {'rushing': rushing_table})
    assert len(results) == 2
    (first, bridge), (second, no_bridge) = results
    assert bridge.cell == (1, 1)
    assert no_bridge is None
    assert second.gold_cell == (2, 1)


def test_generated_bridge_must_be_linked(tmp_path, rushing_table):
    path = tmp_path / 'generated.jsonl'
    path.write_text(json.dumps({
        'qid': 'g1', 'table_id': 'rushing', 'question': 'q', 'answer': 'a',
        'bridge': {'cell': [2, 1], 'passage_id': '/wiki/Walter_Payton'}
    }) + "\n", encoding='utf-8')

    with pytest.raises(CorpusValidationError):
        read_generated_questions(path, {'rushing': rushing_table})


@pytest.mark.parametrize('record, field', [
    ({'gold_cell': [-1, -1]}, 'gold_cell'),
    ({'gold_cell': [3, 0]}, 'gold_cell'),
    ({'bridge': {'cell': [99, 0], 'passage_id': '/wiki/Walter_Payton'}}, 'bridge cell'),
    ({'bridge': {'cell': [0, -2], 'passage_id': '/wiki/Walter_Payton'}}, 'bridge cell'),
])
def test_generated_cells_must_be_in_range(tmp_path, rushing_table, record, field):
    path = tmp_path / 'generated.jsonl'
    path.write_text(json.dumps({
        'qid': 'g7', 'table_id': 'rushing', 'question': 'q', 'answer': 'a', **record
    }) + "\n", encoding='utf-8')

    with pytest.raises(CorpusValidationError) as excinfo:
        read_generated_questions(path, {'rushing': rushing_table})
    assert excinfo.value.record_id == 'g7'
    assert field in str(excinfo.value), "错误信息指出越界的字段"


def test_generated_bridge_malformed_cell(tmp_path, rushing_table):
    path = tmp_path / 'generated.jsonl'
    path.write_text(json.dumps({
        'qid': 'g8', 'table_id': 'rushing', 'question': 'q', 'answer': 'a',
        'bridge': {'cell': [1], 'passage_id': '/wiki/Walter_Payton'}
    }) + "\n", encoding='utf-8')

    with pytest.raises(CorpusParseError):
        read_generated_questions(path, {'rushing': rushing_table})

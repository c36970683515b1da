"""
语料读写测试
统一语料JSON、WTQ TSV、语料切分和语料验证
"""

import json
import logging

import pytest

from src.ingestion.corpus_io import read_predictions, split_corpus, write_corpus, write_predictions
from src.ingestion.data_ingestion import DataIngestionEngine
from src.ingestion.hybrid_reader import HybridCorpusReader, load_hybrid_corpus
from src.ingestion.wtq_reader import WTQReader, load_wtq_corpus
from src.models.data_schema import AnswerSource, HybridCorpus, PredictionRecord, QAExample
from src.validation.errors import CorpusParseError, CorpusValidationError
from src.validation.validator import CorpusValidator, validate_corpus


def minimal_corpus_dict():
    return {
        'tables': [{
            'id': 't1',
            'headers': ['Rank', 'Player'],
            'rows': [['1', 'Emmitt Smith'], ['2', 'Walter Payton']],
            'links': [[[], ['p1']], [[], ['p2']]],
        }],
        'passages': {
            'p1': {'title': 'Emmitt Smith', 'sentences': ['Emmitt Smith played for Dallas .']},
            'p2': {'title': 'Walter Payton', 'sentences': ['Walter Payton played for Chicago .']},
        },
        'examples': [
            {'qid': 'q1', 'table_id': 't1', 'question': 'Who is ranked 2 ?', 'answer': 'Walter Payton',
             'source': 'in_table', 'gold_cell': [1, 1]},
            {'qid': 'q2', 'table_id': 't1', 'question': 'Which city did the rank 1 player play for ?',
             'answer': 'Dallas', 'source': 'in_passage', 'gold_cell': [0, 1]},
        ],
    }


def write_raw(tmp_path, payload, name='corpus.json'):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding='utf-8')
    return path


# ========== 统一语料JSON ==========

def test_fixture_file_counts(tmp_path):
    """2个样本1张表"""
    tables, passages, examples = load_hybrid_corpus(write_raw(tmp_path, minimal_corpus_dict()))

    assert len(tables) == 1, "应只有1张表"
    assert len(examples) == 2, "应有2个样本"
    assert set(passages) == {'p1', 'p2'}
    assert examples[0].gold_cell == (1, 1)
    assert examples[1].source == AnswerSource.IN_PASSAGE
    assert tables[0].cell(1, 1).passage_ids == ['p2']


def test_write_then_load_preserves_corpus(tmp_path, rushing_corpus):
    path = write_corpus(rushing_corpus, tmp_path / 'out' / 'corpus.json')
    loaded = HybridCorpusReader(path).parse_all()
    assert loaded == rushing_corpus, "写出再读取的语料应与原语料相同"


def test_dangling_link_dropped_with_warning(tmp_path, caplog):
    payload = minimal_corpus_dict()
    payload['tables'][0]['links'][0][0] = ['missing_passage']

    with caplog.at_level(logging.WARNING):
        corpus = HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()

    assert corpus.tables['t1'].cell(0, 0).passage_ids == [], "悬空链接应被丢弃"
    assert any('missing_passage' in record.message for record in caplog.records), "应记录警告"


def test_ragged_table_rejected(tmp_path):
    payload = minimal_corpus_dict()
    payload['tables'][0]['rows'][1] = ['2']

    with pytest.raises(CorpusValidationError) as exc_info:
        HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()
    assert exc_info.value.record_id == 't1'


def test_empty_answer_rejected_unless_allowed(tmp_path):
    payload = minimal_corpus_dict()
    payload['examples'][0]['answer'] = ''
    path = write_raw(tmp_path, payload)

    with pytest.raises(CorpusValidationError):
        HybridCorpusReader(path).parse_all()

    corpus = HybridCorpusReader(path, require_answers=False).parse_all()
    assert corpus.examples[0].answer_text == ''


def test_duplicate_question_id_rejected(tmp_path):
    payload = minimal_corpus_dict()
    payload['examples'][1]['qid'] = 'q1'
    with pytest.raises(CorpusValidationError):
        HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()


def test_gold_cell_out_of_range_rejected(tmp_path):
    payload = minimal_corpus_dict()
    payload['examples'][0]['gold_cell'] = [5, 0]
    with pytest.raises(CorpusValidationError):
        HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()


def test_unknown_table_rejected(tmp_path):
    payload = minimal_corpus_dict()
    payload['examples'][0]['table_id'] = 'nope'
    with pytest.raises(CorpusValidationError):
        HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()


def test_invalid_json_is_parse_error(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"tables": [', encoding='utf-8')
    with pytest.raises(CorpusParseError) as exc_info:
        HybridCorpusReader(path).parse_all()
    assert exc_info.value.file == str(path)


def test_missing_top_level_key_is_parse_error(tmp_path):
    payload = minimal_corpus_dict()
    del payload['passages']
    with pytest.raises(CorpusParseError):
        HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()


@pytest.mark.parametrize('sentences', ['Emmitt Smith played for Dallas .', None, {'0': 'text'}])
def test_passage_sentences_must_be_list(tmp_path, sentences):
    payload = minimal_corpus_dict()
    payload['passages']['p1']['sentences'] = sentences
    with pytest.raises(CorpusParseError) as exc_info:
        HybridCorpusReader(write_raw(tmp_path, payload)).parse_all()
    assert exc_info.value.record == 'p1', "字符串不能被拆成逐字符的句子"


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        HybridCorpusReader(tmp_path / 'nope.json')


# ========== WTQ ==========

@pytest.fixture
def wtq_file(tmp_path):
    data_dir = tmp_path / 'data'
    (data_dir / 'csv').mkdir(parents=True)
    (data_dir / 'csv' / '0.csv').write_text(
        "Year,Score,Athlete\n1994,8.5,Ann Lee\n1995,9.1,Bo Chan\n1996,8.5,Cy Diaz\n",
        encoding='utf-8'
    )
    questions = data_dir / 'questions.tsv'
    questions.write_text(
        "nt-0\tWhich year had the highest score ?\tcsv/0.csv\t1995\n"
        "nt-1\tWhat score did Ann Lee get ?\tcsv/0.csv\t8.5\n"
        "nt-2\tWho competed in 1996 ?\tcsv/0.csv\tCy Diaz\n",
        encoding='utf-8'
    )
    return questions


def test_wtq_three_questions(wtq_file):
    tables, examples = load_wtq_corpus(wtq_file)

    assert len(examples) == 3, "应有3个WTQ样本"
    assert len(tables) == 1, "三个问题共用一张表"
    assert tables[0].headers == ['Year', 'Score', 'Athlete']
    assert all(example.source == AnswerSource.IN_TABLE for example in examples)


def test_wtq_gold_cell_only_when_unique(wtq_file):
    _, examples = WTQReader(wtq_file).parse_all()
    by_id = {example.question_id: example for example in examples}

    assert by_id['nt-0'].gold_cell == (1, 0)
    assert by_id['nt-1'].gold_cell is None, "答案匹配两个单元格时不给金标"
    assert by_id['nt-2'].gold_cell == (2, 2)


def test_wtq_missing_table_file(tmp_path):
    questions = tmp_path / 'q.tsv'
    questions.write_text("nt-0\tq ?\tcsv/none.csv\tx\n", encoding='utf-8')
    with pytest.raises(CorpusValidationError):
        WTQReader(questions).parse_all()


def test_ingestion_engine_detects_format(tmp_path, wtq_file):
    hybrid = DataIngestionEngine().add_source(write_raw(tmp_path, minimal_corpus_dict())).ingest_first()
    wtq = DataIngestionEngine().add_source(wtq_file).ingest_first()

    assert len(hybrid.examples) == 2
    assert len(wtq.examples) == 3
    assert wtq.passages == {}, "WTQ没有段落"

    with pytest.raises(ValueError):
        DataIngestionEngine().add_source(wtq_file, fmt='xml')
    with pytest.raises(ValueError):
        DataIngestionEngine().ingest()


# ========== 切分与预测 ==========

def test_split_by_table_is_deterministic(small_synthetic):
    corpus = small_synthetic.corpus
    train_a, dev_a = split_corpus(corpus, 0.5, seed=13)
    train_b, dev_b = split_corpus(corpus, 0.5, seed=13)

    assert train_a == train_b and dev_a == dev_b, "相同种子切分结果应相同"
    assert not set(train_a.tables) & set(dev_a.tables), "同一张表不能同时出现在两侧"
    assert len(train_a.examples) + len(dev_a.examples) == len(corpus.examples)
    for split in (train_a, dev_a):
        assert all(example.table_id in split.tables for example in split.examples)


def test_split_rejects_bad_fraction(small_synthetic):
    with pytest.raises(ValueError):
        split_corpus(small_synthetic.corpus, 1.0, seed=13)


def test_predictions_file(tmp_path):
    records = [
        PredictionRecord(question_id='q1', answer='Walter Payton', cell=(1, 1), row_prob=0.9, col_prob=0.8),
        PredictionRecord(question_id='q2', answer=''),
    ]
    path = tmp_path / 'predictions.jsonl'
    write_predictions(records, path)

    first = json.loads(path.read_text(encoding='utf-8').splitlines()[0])
    assert first['qid'] == 'q1', "预测文件使用qid字段"
    assert read_predictions(path) == records


# ========== 语料验证 ==========

def test_loader_relabels_gold_cell_without_answer(tmp_path):
    payload = minimal_corpus_dict()
    payload['examples'][0]['answer'] = 'Barry Sanders'
    reader = HybridCorpusReader(write_raw(tmp_path, payload))
    corpus = reader.parse_all()

    first, second = corpus.examples
    assert first.source == AnswerSource.UNKNOWN, "金标单元格不含答案时不再标为in_table"
    assert first.gold_cell == (1, 1)
    assert second.source == AnswerSource.IN_PASSAGE
    assert reader.relabeled_examples == 1
    assert not validate_corpus(corpus).warnings


def test_validator_flags_gold_cell_without_answer(rushing_table, rushing_passages):
    example = QAExample(question_id='q1', table_id='rushing', question='Who is ranked 2 ?',
                        answer_text='Barry Sanders', gold_cell=(1, 1), source=AnswerSource.IN_TABLE)
    corpus = HybridCorpus(tables={'rushing': rushing_table}, passages=rushing_passages, examples=[example])

    result = validate_corpus(corpus)
    assert result.is_valid, "警告不影响非严格模式"
    assert any('q1' in warning for warning in result.warnings)
    assert result.score < 100

    strict = CorpusValidator(strict_mode=True).validate_corpus(corpus)
    assert not strict.is_valid, "严格模式下警告也视为失败"


def test_validator_statistics(rushing_corpus):
    result = validate_corpus(rushing_corpus)
    assert result.is_valid
    assert result.stats['examples'] == 1
    assert result.stats['sources'] == {'in_passage': 1}
    assert result.to_dict()['error_count'] == 0

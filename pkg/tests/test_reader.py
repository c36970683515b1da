"""
阅读器测试
行线性化、样本构造、干净样本过滤、片段抽取和答案合并
"""

import pytest
import torch

from src.encoding.tokenization import basic_tokenize
from src.filtering.passage_filter import expand_table_cells
from src.models.data_schema import (
    AnswerSource,
    CellScoreSheet,
    QAExample,
    RankedCell,
    ReaderInstance,
    SpanPrediction,
    Table
)
from src.reading.answerer import AnswerConfig, answer_question
from src.reading.instances import (
    build_reader_instances,
    clean_instance_filter,
    find_answer_spans,
    reader_context,
    training_instances
)
from src.reading.linearizer import linearize_row
from src.reading.span_reader import SpanReader, extract_span, load_reader
from src.reading.trainer import ReaderTrainingConfig, train_reader


@pytest.fixture
def rushing_expanded(hash_encoder, rushing_table, rushing_passages, rushing_example):
    return expand_table_cells(rushing_example.question, rushing_table, rushing_passages, 12, 460, hash_encoder)


# ========== 线性化与上下文 ==========

def test_linearize_row(athlete_table):
    assert linearize_row(athlete_table, 0) == (
        "The Year is 1994 . The Score is 8.5 . The Athlete is Ann Lee . The Place is Minneapolis ."
    )


def test_linearize_empty_cell_and_range():
    table = Table.from_matrix('t', ['Name', 'Note'], [['Ann', '  ']])
    assert linearize_row(table, 0) == "The Name is Ann . The Note is ."
    with pytest.raises(IndexError):
        linearize_row(table, 1)


def test_reader_context_appends_filtered_passages(rushing_table, rushing_expanded):
    context = reader_context(rushing_table, (1, 1), rushing_expanded)

    assert context.startswith(linearize_row(rushing_table, 1) + " ")
    assert context.endswith(rushing_expanded[(1, 1)].passage_text)
    assert reader_context(rushing_table, (2, 1), rushing_expanded) == linearize_row(rushing_table, 2)


# ========== 答案定位 ==========

def test_find_answer_spans():
    tokens = basic_tokenize("The Athlete is Ann Lee . Ann Lee won .")
    assert find_answer_spans(tokens, "Ann Lee") == [(3, 4), (6, 7)]
    assert find_answer_spans(tokens, "the Ann Lee") == [(3, 4), (6, 7)], "冠词不参与匹配"
    assert find_answer_spans(tokens, "") == []
    assert find_answer_spans(tokens, "Bo Chan") == []


def test_find_answer_spans_skips_punctuation():
    tokens = basic_tokenize("The Score is 8.5 .")
    assert find_answer_spans(tokens, "8.5") == [(3, 5)]


# ========== 样本构造 ==========

def test_passage_answer_becomes_positive(rushing_example, rushing_table, rushing_expanded):
    topk = [(1, 1, 1.8), (0, 1, 1.5), (2, 0, 1.2)]
    instances = build_reader_instances(rushing_example, topk, rushing_table, rushing_expanded)

    assert [instance.is_positive for instance in instances] == [True, False, False]
    start, end = instances[0].answer_span
    tokens = basic_tokenize(instances[0].context)
    assert tokens[start:end + 1] == ['jerry']
    assert [instance.rank for instance in instances] == [0, 1, 2]
    assert instances[1].cell_score == 1.5


def test_only_first_positive_is_kept(rushing_table):
    example = QAExample(question_id='q', table_id='rushing', question='Who ranks 2 ?',
                        answer_text='Walter Payton', source=AnswerSource.IN_TABLE)
    topk = [RankedCell(row=1, col=2, score=1.7), RankedCell(row=1, col=1, score=1.6)]

    instances = build_reader_instances(example, topk, rushing_table)
    assert [instance.is_positive for instance in instances] == [True, False]
    assert instances[1].answer_span is None, "降级的候选不带span"


def test_build_instances_requires_candidates(rushing_example, rushing_table):
    with pytest.raises(ValueError):
        build_reader_instances(rushing_example, [], rushing_table)


def test_clean_filter_drops_repeated_answers(rushing_table, rushing_expanded):
    example = QAExample(question_id='q', table_id='rushing', question='Whose nickname is Sweetness ?',
                        answer_text='Payton', source=AnswerSource.IN_PASSAGE)
    instances = build_reader_instances(example, [(1, 1, 1.0), (0, 1, 0.5)], rushing_table, rushing_expanded)

    assert instances[0].is_positive
    cleaned = clean_instance_filter(instances)
    assert [instance.cell for instance in cleaned] == [(0, 1)], "答案出现多次的正样本被过滤, 负样本保留"


def test_training_instances_exclude_questions_without_positive(rushing_table, rushing_expanded,
                                                               rushing_example):
    repeated = QAExample(question_id='repeat', table_id='rushing', question='q',
                         answer_text='Payton', source=AnswerSource.IN_PASSAGE)
    groups = [
        build_reader_instances(rushing_example, [(1, 1, 1.0), (0, 1, 0.5)], rushing_table, rushing_expanded),
        build_reader_instances(repeated, [(1, 1, 1.0), (0, 1, 0.5)], rushing_table, rushing_expanded),
    ]

    clean = training_instances(groups, clean=True)
    assert {instance.question_id for instance in clean} == {'rushing_q0'}
    assert len(training_instances(groups, clean=False)) == 4


def test_reader_instance_span_consistency():
    with pytest.raises(ValueError):
        ReaderInstance(question_id='q', question='q', context='c', is_positive=True, cell=(0, 0), rank=0)
    with pytest.raises(ValueError):
        ReaderInstance(question_id='q', question='q', context='c', answer_span=(0, 0), cell=(0, 0), rank=0)


# ========== 片段阅读器 ==========

def test_extract_returns_valid_spans(tiny_encoder):
    reader = SpanReader(tiny_encoder, max_span_length=3).eval()
    context = "The Athlete is Ann Lee . She lives in Minneapolis ."

    predictions = extract_span("Who is the athlete ?", context, reader, top_n=5)
    assert len(predictions) == 5
    scores = [prediction.span_score for prediction in predictions]
    assert scores == sorted(scores, reverse=True)
    for prediction in predictions:
        if prediction.is_no_answer:
            assert prediction.text == ""
            continue
        assert prediction.end - prediction.start + 1 <= 3
        assert prediction.text in context
        tokens = basic_tokenize(context)[prediction.start:prediction.end + 1]
        assert basic_tokenize(prediction.text) == tokens


def test_extract_slices_non_ascii_context(tiny_encoder):
    reader = SpanReader(tiny_encoder, max_span_length=2).eval()
    context = "The City is İstanbul . Ümit won the Winner cup ."
    words = context.split()

    for prediction in extract_span("Who won ?", context, reader, top_n=8):
        if prediction.is_no_answer:
            continue
        assert prediction.text == " ".join(words[prediction.start:prediction.end + 1]), "片段文本等于对应词元的原文"


def test_span_distribution_has_no_answer_slot(tiny_encoder):
    reader = SpanReader(tiny_encoder).eval()
    starts, ends = reader.span_distribution("Who ?", "Ann Lee won .")

    assert len(starts) == len(ends) == 5, "4个上下文词元加无答案位置"
    assert sum(starts) == pytest.approx(1.0, abs=1e-5)
    assert sum(ends) == pytest.approx(1.0, abs=1e-5)


def test_empty_context_is_no_answer(tiny_encoder):
    reader = SpanReader(tiny_encoder).eval()
    predictions = reader.extract("Who ?", "")

    assert len(predictions) == 1
    assert predictions[0].is_no_answer


def test_span_reader_arguments(tiny_encoder):
    with pytest.raises(ValueError):
        SpanReader(tiny_encoder, max_span_length=0)


def test_instance_loss_skips_truncated_answer(tiny_encoder):
    reader = SpanReader(tiny_encoder, max_span_length=2)
    batch = reader.encode([("Who ?", "Ann Lee won the race .")])

    assert torch.isfinite(reader.instance_loss(batch, 0, (0, 1)))
    assert torch.isfinite(reader.instance_loss(batch, 0, None))
    assert reader.instance_loss(batch, 0, (0, 3)) is None, "超过最大片段长度"
    assert reader.instance_loss(batch, 0, (10, 11)) is None, "答案在截断区域之外"


def test_train_and_reload_reader(tmp_path, tiny_encoder, rushing_example, rushing_table, rushing_expanded):
    instances = build_reader_instances(rushing_example, [(1, 1, 1.0), (0, 1, 0.5)], rushing_table, rushing_expanded)
    config = ReaderTrainingConfig(epochs=2, batch_size=2, lr=1e-3, progress=False)

    result = train_reader(instances, config, tiny_encoder, checkpoint_path=tmp_path / 'reader.pt')
    assert len(result.epoch_losses) == 2
    assert all(loss > 0 for loss in result.epoch_losses)

    restored = load_reader(tmp_path / 'reader.pt')
    context = instances[0].context
    original = result.model.extract(rushing_example.question, context)
    loaded = restored.extract(rushing_example.question, context)
    assert [(p.start, p.end) for p in loaded] == [(p.start, p.end) for p in original]

    with pytest.raises(ValueError):
        train_reader([], config, tiny_encoder)


# ========== 答案合并 ==========

class FakeReader:
    """按上下文返回固定片段"""

    def __init__(self, by_name, abstain=False):
        self.by_name = by_name
        self.abstain = abstain

    def extract(self, question, context, top_n=5):
        for name, score in self.by_name.items():
            if f"is {name} ." in context:
                span = SpanPrediction(start=3, end=3, text=name, span_score=score)
                if self.abstain:
                    return [SpanPrediction(start=-1, end=-1, text="", span_score=score + 1.0), span]
                return [span]
        return []


@pytest.fixture
def two_row_table():
    return Table.from_matrix('names', ['Name'], [['A'], ['B']])


@pytest.fixture
def two_row_sheet():
    return CellScoreSheet(
        row_probs=[0.65, 0.4],
        col_probs=[0.4],
        cell_scores=[[1.05], [0.8]],
        ranking=[RankedCell(row=1, col=0, score=0.8), RankedCell(row=0, col=0, score=1.3)]
    )


def make_example(source=AnswerSource.IN_PASSAGE):
    return QAExample(question_id='q', table_id='names', question='Which name ?', answer_text='A', source=source)


def test_answer_combines_span_and_cell_scores(two_row_table, two_row_sheet):
    reader = FakeReader({'A': 1.0, 'B': 2.0})

    low_mu = answer_question(make_example(), two_row_sheet, two_row_table, reader, AnswerConfig(k=2, mu=1.0))
    assert low_mu.answer == 'B', "2.0 + 0.8 > 1.0 + 1.3"

    high_mu = answer_question(make_example(), two_row_sheet, two_row_table, reader, AnswerConfig(k=2, mu=5.0))
    assert high_mu.answer == 'A', "1.0 + 5*1.3 > 2.0 + 5*0.8"
    assert high_mu.cell == (0, 0)
    assert high_mu.row_prob == 0.65
    assert high_mu.span_score == 1.0


def test_answer_respects_k(two_row_table, two_row_sheet):
    reader = FakeReader({'A': 10.0, 'B': 0.0})
    record = answer_question(make_example(), two_row_sheet, two_row_table, reader, AnswerConfig(k=1))
    assert record.answer == 'B', "只考虑top-1候选"


def test_abstaining_reader_falls_back(two_row_table, two_row_sheet):
    reader = FakeReader({'A': 1.0, 'B': 0.5}, abstain=True)

    in_table = answer_question(make_example(AnswerSource.IN_TABLE), two_row_sheet, two_row_table, reader,
                               AnswerConfig(k=2))
    assert in_table.answer == 'A', "无答案 2.0 + 1.3 胜出, 退回该候选单元格"
    assert in_table.cell == (0, 0)
    assert in_table.span_score is None
    assert in_table.combined_score == pytest.approx(3.3)

    in_passage = answer_question(make_example(), two_row_sheet, two_row_table, reader, AnswerConfig(k=2))
    assert in_passage.answer == 'A', "段落问题取合并分数最高的非空片段"
    assert in_passage.combined_score == pytest.approx(2.3)


class ScriptedReader:
    """按上下文返回预先设定的预测列表"""

    def __init__(self, by_name):
        self.by_name = by_name

    def extract(self, question, context, top_n=5):
        for name, predictions in self.by_name.items():
            if f"is {name} ." in context:
                return predictions
        return []


def test_strong_no_answer_beats_weak_span(two_row_table, two_row_sheet):
    reader = ScriptedReader({
        'A': [SpanPrediction(start=-1, end=-1, text="", span_score=9.0)],
        'B': [SpanPrediction(start=3, end=3, text='B', span_score=-4.0)],
    })

    record = answer_question(make_example(AnswerSource.IN_TABLE), two_row_sheet, two_row_table, reader,
                             AnswerConfig(k=2))
    assert record.answer == 'A', "9.0 + 1.3 的无答案高于 -4.0 + 0.8 的片段"
    assert record.cell == (0, 0)
    assert record.combined_score == pytest.approx(10.3)

    in_passage = answer_question(make_example(), two_row_sheet, two_row_table, reader, AnswerConfig(k=2))
    assert in_passage.answer == 'B', "段落问题不能用单元格文本作答"
    assert in_passage.cell == (1, 0)
    assert in_passage.combined_score == pytest.approx(-3.2)


def test_combined_score_is_recorded(two_row_table, two_row_sheet):
    reader = FakeReader({'A': 1.0, 'B': 2.0})
    record = answer_question(make_example(), two_row_sheet, two_row_table, reader, AnswerConfig(k=2, mu=0.5))
    assert record.answer == 'B'
    assert record.combined_score == pytest.approx(2.0 + 0.5 * 0.8)


def test_cell_mode_and_missing_reader(two_row_table, two_row_sheet):
    record = answer_question(make_example(), two_row_sheet, two_row_table, None, AnswerConfig(mode='cell'))
    assert record.answer == 'B'
    assert record.cell == (1, 0)

    with pytest.raises(ValueError):
        answer_question(make_example(), two_row_sheet, two_row_table, None, AnswerConfig(mode='span'))
    with pytest.raises(ValueError):
        answer_question(make_example(), two_row_sheet, two_row_table, None, AnswerConfig(mode='table'))

"""
流水线测试
阶段执行、前置产物检查、manifest跳过、并行确定性和sigma网格搜索
"""

import json

import pytest

from src.fixtures.synthetic import generate_corpus, write_fixture_corpus
from src.ingestion.corpus_io import read_predictions
from src.validation.errors import MissingPrerequisiteError
from src.workflow.config import PipelineConfig
from src.workflow.stages import STAGE_ORDER, PipelineRunner, StageManifest
from src.workflow.sweep import run_dir, sweep_sigma


@pytest.fixture(scope='module')
def fixture_corpus_path(tmp_path_factory):
    synthetic = generate_corpus(n_tables=5, rows=(3, 4), cols=(3, 4), seed=17, questions_per_table=2)
    corpus_path, _ = write_fixture_corpus(synthetic, tmp_path_factory.mktemp('fixtures'))
    return corpus_path


def small_config(corpus_path, output_dir, **updates) -> PipelineConfig:
    values = dict(
        corpus_path=corpus_path,
        output_dir=output_dir,
        dev_fraction=0.2,
        encoder_dim=16,
        encoder_layers=1,
        encoder_heads=2,
        vocab_size=200,
        max_length=128,
        dropout=0.0,
        hash_dim=32,
        epochs=1,
        batch=4,
        lr=1e-3,
        k=3,
        eval_split='train',
        progress=False,
    )
    values.update(updates)
    return PipelineConfig(**values)


# ========== 完整流水线 ==========

def test_full_pipeline(tmp_path, fixture_corpus_path):
    runner = PipelineRunner(small_config(fixture_corpus_path, tmp_path / 'run'))
    results = runner.run_all()

    assert [result.stage for result in results] == STAGE_ORDER
    assert not any(result.skipped for result in results)

    layout = runner.layout
    train = runner.corpus('train')
    predictions = read_predictions(layout.predictions('train'))
    assert sorted(p.question_id for p in predictions) == sorted(e.question_id for e in train.examples)

    report = json.loads(layout.eval_report.read_text(encoding='utf-8'))
    assert 0.0 <= report['report']['em'] <= 1.0
    assert set(report['report']['hits']) == {'1', '3', '5'}
    assert sum(report['error_breakdown'].values()) == sum(e.gold_cell is not None for e in train.examples)

    for stage in STAGE_ORDER:
        manifest = StageManifest.model_validate_json(layout.manifest(stage).read_text(encoding='utf-8'))
        assert manifest.config_hash == runner.config.config_hash()
        assert manifest.seed == 13

    # 与自身比较时所有差值为0
    table = runner.compare_ablation(layout.predictions('train'), layout.selections('train'))
    assert (table['delta'] == 0).all()
    assert layout.ablation_table.exists()

    heatmap = runner.run_stage('heatmap')
    assert 1 <= len(heatmap.outputs) <= runner.config.heatmap_limit


def test_cell_mode_needs_no_reader(tmp_path, fixture_corpus_path):
    runner = PipelineRunner(small_config(fixture_corpus_path, tmp_path / 'run', reader_mode='cell'))
    runner.run_all()

    assert not runner.layout.reader_checkpoint.exists()
    train = runner.corpus('train')
    for record in read_predictions(runner.layout.predictions('train')):
        example = next(e for e in train.examples if e.question_id == record.question_id)
        assert record.answer == train.table_for(example).cell(*record.cell).text


# ========== 前置产物 ==========

def test_missing_prerequisite_names_producer(tmp_path, fixture_corpus_path):
    runner = PipelineRunner(small_config(fixture_corpus_path, tmp_path / 'run'))

    with pytest.raises(MissingPrerequisiteError) as exc_info:
        runner.run_stage('select-cells')
    assert exc_info.value.required_stage == 'ingest'

    runner.run_all(['ingest', 'filter-passages'])
    with pytest.raises(MissingPrerequisiteError) as exc_info:
        runner.run_stage('select-cells')
    assert exc_info.value.required_stage == 'train-selector'


def test_missing_corpus_and_unknown_stage(tmp_path):
    runner = PipelineRunner(small_config(tmp_path / 'missing.json', tmp_path / 'run'))
    with pytest.raises(FileNotFoundError):
        runner.run_stage('ingest')
    with pytest.raises(ValueError):
        runner.run_stage('deploy')


# ========== manifest ==========

def test_unchanged_stage_is_skipped(tmp_path, fixture_corpus_path):
    config = small_config(fixture_corpus_path, tmp_path / 'run')
    first = PipelineRunner(config).run_stage('ingest')
    second = PipelineRunner(config).run_stage('ingest')
    forced = PipelineRunner(config.model_copy(update={'force': True})).run_stage('ingest')

    assert not first.skipped
    assert second.skipped, "配置和输入未变时跳过"
    assert not forced.skipped


def test_changed_config_or_output_reruns(tmp_path, fixture_corpus_path):
    config = small_config(fixture_corpus_path, tmp_path / 'run')
    runner = PipelineRunner(config)
    runner.run_stage('ingest')

    assert not PipelineRunner(config.model_copy(update={'k': 4})).run_stage('ingest').skipped

    runner = PipelineRunner(config)
    runner.run_stage('ingest')
    runner.layout.corpus('dev').write_text('{}', encoding='utf-8')
    assert not PipelineRunner(config).run_stage('ingest').skipped, "产物被改动时重跑"


# ========== 确定性 ==========

def test_filter_passages_deterministic_and_parallel(tmp_path, fixture_corpus_path):
    outputs = []
    for name, workers in (('a', 1), ('b', 1), ('c', 2)):
        runner = PipelineRunner(small_config(fixture_corpus_path, tmp_path / name, workers=workers))
        runner.run_all(['ingest', 'filter-passages'])
        outputs.append(runner.layout.expanded('train').read_bytes())

    assert outputs[0] == outputs[1], "相同配置输出逐字节相同"
    assert outputs[0] == outputs[2], "并行结果与串行相同"


# ========== sigma网格搜索 ==========

def test_sweep_picks_best_sigma_with_lower_tie(tmp_path):
    config = PipelineConfig(output_dir=tmp_path / 'sweep')
    scores = {0.0: 0.5, 0.5: 0.7, 1.0: 0.7}
    seen = []

    def fake_runner(run_config):
        seen.append(run_config)
        return scores[run_config.sigma]

    result = sweep_sigma(config, [1.0, 0.0, 0.5], runner=fake_runner)

    assert len(seen) == 3
    assert [c.output_dir for c in seen] == [run_dir(config, s) for s in (0.0, 0.5, 1.0)]
    assert seen[0].output_dir.name == 'sigma_0.00'
    assert result.best_sigma == 0.5, "同分取较小的sigma"
    assert result.best_hits_at_1 == 0.7

    saved = json.loads((tmp_path / 'sweep' / 'sigma_sweep.json').read_text(encoding='utf-8'))
    assert saved['best_sigma'] == 0.5


def test_sweep_default_grid_and_errors(tmp_path):
    config = PipelineConfig(output_dir=tmp_path / 'sweep')
    calls = []

    result = sweep_sigma(config, runner=lambda c: calls.append(c.sigma) or 0.0)
    assert len(calls) == 11
    assert result.best_sigma == 0.0

    with pytest.raises(ValueError):
        sweep_sigma(config, [], runner=lambda c: 0.0)
    with pytest.raises(ValueError):
        sweep_sigma(config, [0.5, 1.5], runner=lambda c: 0.0)

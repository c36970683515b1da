"""
命令行入口测试
参数解析、配置覆盖和退出码
"""

import pytest

import main
from src.ingestion.hybrid_reader import HybridCorpusReader


@pytest.fixture
def cli_args(clean_hqa_env, tmp_path):
    """公共参数: 不存在的配置文件 (使用默认配置) 和临时产物目录"""
    return ['--config', str(tmp_path / 'missing.yaml'), '--output-dir', str(tmp_path / 'run')]


def test_config_overrides_only_given_fields():
    args = main.build_parser().parse_args(['train-selector', '--sigma', '0.3', '--epochs', '2'])
    assert main.config_overrides(args) == {'sigma': 0.3, 'epochs': 2}

    args = main.build_parser().parse_args(['filter-passages', '--k', '5', '--force'])
    assert main.config_overrides(args) == {'filter_k': 5, 'force': True}


def test_generate_fixtures(tmp_path, cli_args):
    out_dir = tmp_path / 'fixtures'
    code = main.main(['generate-fixtures', *cli_args, '--out-dir', str(out_dir), '--n-tables', '3',
                      '--min-rows', '3', '--max-rows', '3', '--questions-per-table', '2'])

    assert code == main.EXIT_OK
    corpus = HybridCorpusReader(out_dir / 'corpus.json').parse_all()
    assert len(corpus.tables) == 3
    assert len(corpus.examples) == 6


def test_degenerate_fixture_ranges_exit_1(tmp_path, cli_args):
    code = main.main(['generate-fixtures', *cli_args, '--out-dir', str(tmp_path / 'f'),
                      '--min-rows', '5', '--max-rows', '2'])
    assert code == main.EXIT_VALIDATION


def test_missing_prerequisite_exit_2(cli_args):
    assert main.main(['select-cells', *cli_args]) == main.EXIT_MISSING_PREREQUISITE


def test_missing_corpus_exit_1(tmp_path, cli_args):
    code = main.main(['ingest', *cli_args, '--corpus', str(tmp_path / 'missing.json')])
    assert code == main.EXIT_VALIDATION


def test_invalid_override_exit_1(cli_args):
    assert main.main(['train-selector', *cli_args, '--sigma', '1.5']) == main.EXIT_VALIDATION


def test_internal_error_exit_3(monkeypatch, cli_args):
    def broken(args):
        raise RuntimeError("boom")

    monkeypatch.setattr(main, 'dispatch', broken)
    assert main.main(['ingest', *cli_args]) == main.EXIT_INTERNAL

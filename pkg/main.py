"""
混合表格-文本问答流水线 - 主入口文件

按阶段运行: 语料摄入 -> 对齐标签生成 -> 段落过滤 -> 选择器训练 -> 单元格选择
-> 阅读器训练 -> 答案生成 -> 评估

使用方式:
    # 方式1: 生成合成语料并跑完整流水线
    python main.py generate-fixtures --out-dir data/synthetic
    python main.py pipeline --corpus data/synthetic/corpus.json

    # 方式2: 单独执行某个阶段
    python main.py train-selector --sigma 0.5 --epochs 4

    # 方式3: sigma网格搜索
    python main.py sweep-sigma --grid 0,0.5,1

退出码:
    0 成功, 1 数据验证失败, 2 缺少前置阶段, 3 内部错误
"""

import argparse
import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import ValidationError

# 添加项目路径
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.fixtures.synthetic import generate_corpus, write_fixture_corpus
from src.validation.errors import CorpusParseError, CorpusValidationError, MissingPrerequisiteError
from src.workflow.config import PipelineConfig, load_config, logging_settings
from src.workflow.stages import AUXILIARY_STAGES, STAGE_ORDER, PipelineRunner
from src.workflow.sweep import sweep_sigma

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_MISSING_PREREQUISITE = 2
EXIT_INTERNAL = 3

DEFAULT_LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(settings: Dict[str, Any], level_override: Optional[str] = None):
    """
    按配置文件的logging节配置日志

    Args:
        settings: logging节
        level_override: 命令行指定的日志级别
    """
    level = (level_override or settings.get('level', 'INFO')).upper()
    fmt = settings.get('format', DEFAULT_LOG_FORMAT)
    handlers_config = settings.get('handlers', {})

    handlers: List[logging.Handler] = []
    if handlers_config.get('console', {}).get('enabled', True):
        handlers.append(logging.StreamHandler())

    file_config = handlers_config.get('file', {})
    if file_config.get('enabled', False):
        log_path = Path(file_config.get('path', 'outputs/logs/app.log'))
        log_path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(RotatingFileHandler(
            log_path,
            maxBytes=int(file_config.get('max_bytes', 10485760)),
            backupCount=int(file_config.get('backup_count', 5)),
            encoding='utf-8'
        ))

    logging.basicConfig(level=level, format=fmt, handlers=handlers, force=True)


def banner(title: str):
    logger.info("\n" + "="*80)
    logger.info(title)
    logger.info("="*80)


def run_stages(config: PipelineConfig, stages: List[str]):
    """依次执行阶段, 每个阶段打印标题"""
    runner = PipelineRunner(config)
    for step, stage in enumerate(stages, start=1):
        banner(f"Step {step}: {stage}")
        result = runner.run_stage(stage)
        if result.skipped:
            logger.info(f"✓ {stage} 已是最新, 跳过 (使用 --force 重新执行)")
        else:
            logger.info(f"✓ {stage} 完成, 产物 {len(result.outputs)} 个")
            for path in result.outputs:
                logger.info(f"  - {path}")
    return runner


def cmd_generate_fixtures(args) -> int:
    """生成合成语料"""
    banner("生成合成语料")
    synthetic = generate_corpus(
        n_tables=args.n_tables,
        rows=(args.min_rows, args.max_rows),
        cols=(args.min_cols, args.max_cols),
        seed=args.fixture_seed,
        questions_per_table=args.questions_per_table
    )
    corpus_path, labels_path = write_fixture_corpus(synthetic, args.out_dir)
    logger.info(f"✓ 语料: {corpus_path}")
    logger.info(f"✓ 对齐标签: {labels_path}")
    logger.info(f"  - 表格数: {len(synthetic.corpus.tables)}")
    logger.info(f"  - 问题数: {len(synthetic.corpus.examples)}")
    return EXIT_OK


def cmd_evaluate(config: PipelineConfig, args) -> int:
    """评估, 可选与另一组预测做消融对比"""
    runner = run_stages(config, ['evaluate'])
    if args.ablation:
        banner("消融对比")
        table = runner.compare_ablation(args.ablation, args.ablation_selections)
        logger.info("\n" + table.to_string(index=False, float_format='%.4f'))
        logger.info(f"✓ 对比表: {runner.layout.ablation_table}")
    return EXIT_OK


def cmd_sweep(config: PipelineConfig, args) -> int:
    """sigma网格搜索"""
    banner("sigma网格搜索")
    grid = None
    if args.grid:
        grid = [float(part) for part in args.grid.split(',') if part.strip()]
    result = sweep_sigma(config, grid)
    table = pd.DataFrame(sorted(result.scores.items()), columns=['sigma', 'hits@1'])
    logger.info("\n" + table.to_string(index=False, float_format='%.4f'))
    logger.info(f"✓ 最优 sigma = {result.best_sigma:.2f} (dev Hits@1 = {result.best_hits_at_1:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """命令行参数"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default='config.yaml', help='配置文件路径 (默认: config.yaml)')
    common.add_argument('--output-dir', dest='output_dir', help='产物目录')
    common.add_argument('--corpus', dest='corpus_path', help='输入语料路径')
    common.add_argument('--seed', type=int, help='随机种子')
    common.add_argument('--workers', type=int, help='按问题并行的线程数')
    common.add_argument('--force', action='store_true', default=None, help='忽略manifest强制重跑')
    common.add_argument('--log-level', dest='log_level', help='日志级别 (DEBUG/INFO/WARNING)')

    parser = argparse.ArgumentParser(
        description='混合表格-文本问答流水线',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  python main.py generate-fixtures --out-dir data/synthetic
  python main.py pipeline --corpus data/synthetic/corpus.json
  python main.py evaluate --ablation outputs/no_align/predictions.dev.jsonl
        """
    )
    sub = parser.add_subparsers(dest='command', required=True)

    ingest = sub.add_parser('ingest', parents=[common], help='读取并切分语料')
    ingest.add_argument('--dev-corpus', dest='dev_corpus_path', help='独立dev语料')
    ingest.add_argument('--format', dest='corpus_format', choices=['auto', 'hybrid', 'wtq'])
    ingest.add_argument('--dev-fraction', dest='dev_fraction', type=float)

    sub.add_parser('build-alignment-data', parents=[common], help='生成表格-问题对齐标签')

    filtering = sub.add_parser('filter-passages', parents=[common], help='为链接单元格追加相关句子')
    filtering.add_argument('--k', dest='filter_k', type=int, help='每个单元格最多追加的句子数')
    filtering.add_argument('--budget', dest='token_budget', type=int, help='单元格词元预算')
    filtering.add_argument('--encoder', dest='filter_encoder', choices=['hash', 'external'])

    train_selector = sub.add_parser('train-selector', parents=[common], help='训练单元格选择器')
    train_selector.add_argument('--sigma', type=float)
    train_selector.add_argument('--k', type=int)
    train_selector.add_argument('--epochs', type=int)
    train_selector.add_argument('--lr', type=float)
    train_selector.add_argument('--batch', type=int)

    select_cells = sub.add_parser('select-cells', parents=[common], help='输出每个问题的单元格排序')
    select_cells.add_argument('--k', type=int)

    train_reader = sub.add_parser('train-reader', parents=[common], help='训练片段阅读器')
    train_reader.add_argument('--epochs', type=int)
    train_reader.add_argument('--lr', type=float)
    train_reader.add_argument('--batch', type=int)

    answer = sub.add_parser('answer', parents=[common], help='生成预测答案')
    answer.add_argument('--k', type=int)
    answer.add_argument('--mu', type=float)
    answer.add_argument('--mode', dest='reader_mode', choices=['span', 'cell'])

    evaluate = sub.add_parser('evaluate', parents=[common], help='计算EM/F1/Hits@k/MRR')
    evaluate.add_argument('--ablation', help='对照组预测文件 (如 sigma=0 的运行)')
    evaluate.add_argument('--ablation-selections', dest='ablation_selections', help='对照组单元格选择文件')

    heatmap = sub.add_parser('heatmap', parents=[common], help='导出问题词元 x 表头词元相关度CSV')
    heatmap.add_argument('--normalize', dest='heatmap_normalize', choices=['none', 'softmax'])
    heatmap.add_argument('--limit', dest='heatmap_limit', type=int)

    sweep = sub.add_parser('sweep-sigma', parents=[common], help='按dev Hits@1搜索sigma')
    sweep.add_argument('--grid', help='逗号分隔的sigma取值 (默认使用配置中的网格)')

    fixtures = sub.add_parser('generate-fixtures', parents=[common], help='生成合成语料')
    fixtures.add_argument('--out-dir', dest='out_dir', default='data/synthetic')
    fixtures.add_argument('--n-tables', dest='n_tables', type=int, default=50)
    fixtures.add_argument('--min-rows', dest='min_rows', type=int, default=4)
    fixtures.add_argument('--max-rows', dest='max_rows', type=int, default=8)
    fixtures.add_argument('--min-cols', dest='min_cols', type=int, default=3)
    fixtures.add_argument('--max-cols', dest='max_cols', type=int, default=6)
    fixtures.add_argument('--fixture-seed', dest='fixture_seed', type=int, default=13)
    fixtures.add_argument('--questions-per-table', dest='questions_per_table', type=int, default=4)

    pipeline = sub.add_parser('pipeline', parents=[common], help='依次执行全部阶段')
    pipeline.add_argument('--sigma', type=float)
    pipeline.add_argument('--epochs', type=int)
    pipeline.add_argument('--lr', type=float)

    return parser


def config_overrides(args) -> Dict[str, Any]:
    """命令行中与PipelineConfig同名的参数"""
    return {
        name: getattr(args, name)
        for name in PipelineConfig.model_fields
        if getattr(args, name, None) is not None
    }


def dispatch(args) -> int:
    if args.command == 'generate-fixtures':
        return cmd_generate_fixtures(args)

    config = load_config(args.config, overrides=config_overrides(args))
    logger.info(f"✓ 配置加载成功: {args.config} (hash {config.config_hash()[:12]})")
    logger.info(f"  - 产物目录: {config.output_dir}")
    logger.info(f"  - 随机种子: {config.seed}")

    if args.command == 'pipeline':
        run_stages(config, STAGE_ORDER)
    elif args.command == 'evaluate':
        return cmd_evaluate(config, args)
    elif args.command == 'sweep-sigma':
        return cmd_sweep(config, args)
    elif args.command in STAGE_ORDER or args.command in AUXILIARY_STAGES:
        run_stages(config, [args.command])
    else:
        raise ValueError(f"Unknown command: {args.command}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(logging_settings(args.config), args.log_level)

    try:
        code = dispatch(args)
        logger.info("\n✓ 处理成功完成!")
        return code

    except MissingPrerequisiteError as e:
        logger.error(f"\n✗ 缺少前置阶段: {e}")
        logger.info(f"提示: 请先执行 python main.py {e.required_stage}")
        return EXIT_MISSING_PREREQUISITE

    except FileNotFoundError as e:
        logger.error(f"\n✗ 文件未找到: {e}")
        return EXIT_VALIDATION

    except (CorpusParseError, CorpusValidationError, ValidationError, ValueError) as e:
        logger.error(f"\n✗ 数据验证失败: {e}")
        return EXIT_VALIDATION

    except Exception as e:
        logger.error(f"\n✗ 运行失败: {e}", exc_info=True)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

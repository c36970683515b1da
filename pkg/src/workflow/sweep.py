"""
sigma网格搜索
每个sigma独立训练一个选择器, 按dev Hits@1选最优值 (同分取较小的sigma)
"""

import logging
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

from pydantic import BaseModel

from .config import PipelineConfig
from .stages import ArtifactLayout, PipelineRunner, write_json
from ..selection.trainer import selection_hits_at_1
from ..selection.selector_model import load_selector

logger = logging.getLogger(__name__)

# 训练一个选择器并返回dev Hits@1
SigmaRunner = Callable[[PipelineConfig], float]

SWEEP_STAGES = ['ingest', 'build-alignment-data', 'filter-passages', 'train-selector']


class SweepResult(BaseModel):
    """网格搜索结果"""
    best_sigma: float
    best_hits_at_1: float
    scores: Dict[float, float]


def run_dir(config: PipelineConfig, sigma: float) -> Path:
    return Path(config.output_dir) / f'sigma_{sigma:.2f}'


def train_and_score(config: PipelineConfig) -> float:
    """执行到train-selector为止, 返回dev Hits@1 (无dev样本时用训练集)"""
    runner = PipelineRunner(config)
    runner.run_all(SWEEP_STAGES)

    dev = runner.corpus('dev')
    split = 'dev' if dev.examples else 'train'
    expanded = runner.expanded(split)
    model = load_selector(runner.layout.selector_checkpoint)
    return selection_hits_at_1(model, runner.corpus(split), expanded)


def sweep_sigma(
    config: PipelineConfig,
    grid: Optional[Sequence[float]] = None,
    runner: Optional[SigmaRunner] = None
) -> SweepResult:
    """
    sigma网格搜索

    Args:
        config: 基础配置, 每个sigma的产物写在 output_dir/sigma_<值>/ 下
        grid: sigma取值, 缺省使用config.sigma_grid
        runner: 训练并打分的函数 (测试时可替换)

    Returns:
        SweepResult, 同时写出 output_dir/sigma_sweep.json
    """
    grid = list(config.sigma_grid if grid is None else grid)
    if not grid:
        raise ValueError("sigma grid must not be empty")
    for sigma in grid:
        if not 0.0 <= sigma <= 1.0:
            raise ValueError(f"sigma {sigma} outside [0, 1]")

    runner = runner or train_and_score
    scores: Dict[float, float] = {}
    for sigma in sorted(set(grid)):
        run_config = config.model_copy(update={'sigma': sigma, 'output_dir': run_dir(config, sigma)})
        scores[sigma] = runner(run_config)
        logger.info(f"sigma={sigma:.2f}: dev Hits@1={scores[sigma]:.4f}")

    best_sigma = None
    for sigma in sorted(scores):
        if best_sigma is None or scores[sigma] > scores[best_sigma]:
            best_sigma = sigma

    result = SweepResult(best_sigma=best_sigma, best_hits_at_1=scores[best_sigma], scores=scores)
    write_json(result.model_dump(mode='json'), ArtifactLayout(config.output_dir).sweep_report)
    logger.info(f"Best sigma {best_sigma:.2f} with dev Hits@1={scores[best_sigma]:.4f}")
    return result


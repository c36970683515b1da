"""
流水线模块
配置加载、阶段执行和sigma网格搜索
"""

from .config import PipelineConfig, load_config, logging_settings
from .stages import (
    STAGE_ORDER,
    AUXILIARY_STAGES,
    ArtifactLayout,
    PipelineRunner,
    StageManifest,
    StageResult,
    run_stage
)
from .sweep import SweepResult, sweep_sigma

__all__ = [
    'PipelineConfig',
    'load_config',
    'logging_settings',
    'STAGE_ORDER',
    'AUXILIARY_STAGES',
    'ArtifactLayout',
    'PipelineRunner',
    'StageManifest',
    'StageResult',
    'run_stage',
    'SweepResult',
    'sweep_sigma'
]

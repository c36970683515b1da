"""
流水线配置
config.yaml (分节) -> 环境变量 (HQA_前缀, 支持.env) -> 命令行参数, 依次覆盖
"""

import hashlib
import json
import logging
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator, model_validator

logger = logging.getLogger(__name__)

ENV_PREFIX = 'HQA_'

# 不参与配置哈希的字段 (只影响执行方式, 不影响产物)
NON_HASHED_FIELDS = frozenset({'force', 'workers', 'progress'})

# 不并入PipelineConfig的配置节
NON_PIPELINE_SECTIONS = frozenset({'application', 'logging'})

_ENV_PATTERN = re.compile(r'\$\{([A-Za-z_][A-Za-z0-9_]*)(?::-([^}]*))?\}')


class PipelineConfig(BaseModel):
    """
    流水线配置
    所有阶段共享, 配置哈希写入每个阶段的manifest
    """

    # 路径
    corpus_path: Path = Field(default=Path('data/corpus.json'), description="输入语料 (统一JSON或WTQ TSV)")
    corpus_format: str = Field(default='auto', description="auto / hybrid / wtq")
    dev_corpus_path: Optional[Path] = Field(default=None, description="独立dev语料, 缺省时按表格切分")
    dev_fraction: float = Field(default=0.2, ge=0, lt=1)
    output_dir: Path = Field(default=Path('outputs/run'))

    # 编码器
    encoder: str = Field(default='tiny', description="可训练骨干: tiny / external")
    filter_encoder: str = Field(default='hash', description="段落过滤编码器: hash / external")
    pretrained_model: str = Field(default='albert-base-v2')
    pooling: str = Field(default='mean')
    encoder_dim: int = Field(default=64, ge=8)
    encoder_layers: int = Field(default=2, ge=1)
    encoder_heads: int = Field(default=4, ge=1)
    vocab_size: int = Field(default=8000, ge=100)
    max_length: int = Field(default=512, ge=16)
    dropout: float = Field(default=0.1, ge=0, lt=1)
    hash_dim: int = Field(default=256, ge=8)

    # 段落过滤
    filter_k: int = Field(default=12, ge=1)
    token_budget: int = Field(default=460, ge=1)
    similarity: str = Field(default='cosine')

    # 单元格选择
    k: int = Field(default=5, ge=1)
    sigma: float = Field(default=0.5, ge=0, le=1)
    sigma_grid: List[float] = Field(default_factory=lambda: [round(0.1 * i, 1) for i in range(11)])
    heatmap_normalize: str = Field(default='none')
    heatmap_limit: int = Field(default=10, ge=1)

    # 阅读器
    mu: float = Field(default=1.0, ge=0)
    reader_mode: str = Field(default='span')
    clean_instances: bool = True
    max_span_length: int = Field(default=30, ge=1)

    # 训练
    lr: float = Field(default=5e-5, gt=0)
    batch: int = Field(default=32, ge=1)
    epochs: int = Field(default=4, ge=1)
    seed: int = 13
    weight_decay: float = Field(default=0.01, ge=0)
    max_grad_norm: float = Field(default=1.0, gt=0)

    # 运行
    eval_split: str = Field(default='dev')
    workers: int = Field(default=1, ge=1)
    force: bool = False
    strict_mode: bool = False
    progress: bool = True

    @field_validator('corpus_format')
    @classmethod
    def validate_corpus_format(cls, v):
        if v not in ('auto', 'hybrid', 'wtq'):
            raise ValueError(f'corpus_format must be auto, hybrid or wtq, got {v}')
        return v

    @field_validator('encoder')
    @classmethod
    def validate_encoder(cls, v):
        if v not in ('tiny', 'external'):
            raise ValueError(f'encoder must be tiny or external, got {v}')
        return v

    @field_validator('filter_encoder')
    @classmethod
    def validate_filter_encoder(cls, v):
        if v not in ('hash', 'external'):
            raise ValueError(f'filter_encoder must be hash or external, got {v}')
        return v

    @field_validator('pooling')
    @classmethod
    def validate_pooling(cls, v):
        if v not in ('mean', 'cls'):
            raise ValueError(f'pooling must be mean or cls, got {v}')
        return v

    @field_validator('similarity')
    @classmethod
    def validate_similarity(cls, v):
        if v not in ('cosine', 'dot'):
            raise ValueError(f'similarity must be cosine or dot, got {v}')
        return v

    @field_validator('heatmap_normalize')
    @classmethod
    def validate_heatmap_normalize(cls, v):
        if v not in ('none', 'softmax'):
            raise ValueError(f'heatmap_normalize must be none or softmax, got {v}')
        return v

    @field_validator('reader_mode')
    @classmethod
    def validate_reader_mode(cls, v):
        if v not in ('span', 'cell'):
            raise ValueError(f'reader_mode must be span or cell, got {v}')
        return v

    @field_validator('eval_split')
    @classmethod
    def validate_eval_split(cls, v):
        if v not in ('train', 'dev'):
            raise ValueError(f'eval_split must be train or dev, got {v}')
        return v

    @field_validator('sigma_grid', mode='before')
    @classmethod
    def parse_sigma_grid(cls, v):
        """环境变量里的网格写成逗号分隔"""
        if isinstance(v, str):
            return [float(part) for part in v.split(',') if part.strip()]
        return v

    @field_validator('sigma_grid')
    @classmethod
    def validate_sigma_grid(cls, v):
        for sigma in v:
            if not 0.0 <= sigma <= 1.0:
                raise ValueError(f'sigma grid value {sigma} outside [0, 1]')
        return v

    @model_validator(mode='after')
    def validate_encoder_shape(self):
        if self.encoder == 'tiny' and self.encoder_dim % self.encoder_heads != 0:
            raise ValueError(
                f'encoder_dim {self.encoder_dim} must be divisible by encoder_heads {self.encoder_heads}'
            )
        return self

    def config_hash(self) -> str:
        """配置哈希 (排序键的JSON, 排除只影响执行方式的字段)"""
        payload = self.model_dump(mode='json', exclude=set(NON_HASHED_FIELDS))
        canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _substitute(match: re.Match) -> str:
    name, default = match.group(1), match.group(2)
    if name in os.environ:
        return os.environ[name]
    return default if default is not None else match.group(0)


def interpolate_env(value: Any) -> Any:
    """递归替换 ${VAR} 和 ${VAR:-默认值}; 未设置且无默认值的变量保持原样"""
    if isinstance(value, str):
        return _ENV_PATTERN.sub(_substitute, value)
    if isinstance(value, dict):
        return {key: interpolate_env(item) for key, item in value.items()}
    if isinstance(value, list):
        return [interpolate_env(item) for item in value]
    return value


def read_yaml_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    读取YAML配置并替换环境变量

    Args:
        config_path: 配置文件路径

    Returns:
        配置字典 (文件不存在时为空字典)
    """
    config_path = Path(config_path)
    if not config_path.exists():
        logger.warning(f"Config file {config_path} not found, using defaults")
        return {}

    with open(config_path, 'r', encoding='utf-8') as f:
        raw = yaml.safe_load(f) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"Config file {config_path} must contain a mapping")
    return interpolate_env(raw)


def flatten_sections(raw: Dict[str, Any]) -> Dict[str, Any]:
    """把分节配置展平为PipelineConfig字段; 同名键出现在两个节中时报错"""
    flat: Dict[str, Any] = {}
    for section, values in raw.items():
        if section in NON_PIPELINE_SECTIONS:
            continue
        if not isinstance(values, dict):
            raise ValueError(f"Config section '{section}' must be a mapping")
        for key, value in values.items():
            if key in flat:
                raise ValueError(f"Config key '{key}' appears in more than one section")
            flat[key] = value

    unknown = set(flat) - set(PipelineConfig.model_fields)
    if unknown:
        raise ValueError(f"Unknown config keys: {sorted(unknown)}")
    return flat


def env_overrides(environ: Optional[Dict[str, str]] = None) -> Dict[str, str]:
    """HQA_<FIELD> 环境变量"""
    environ = os.environ if environ is None else environ
    overrides = {}
    for name in PipelineConfig.model_fields:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            overrides[name] = environ[key]
    return overrides


def load_config(
    config_path: Union[str, Path] = 'config.yaml',
    overrides: Optional[Dict[str, Any]] = None,
    dotenv_path: Optional[Union[str, Path]] = None
) -> PipelineConfig:
    """
    加载流水线配置

    优先级: 默认值 < config.yaml < 环境变量 < overrides (命令行)

    Args:
        config_path: YAML配置文件
        overrides: 命令行覆盖值, 值为None的键被忽略
        dotenv_path: .env文件 (缺省时从当前目录查找)

    Returns:
        PipelineConfig
    """
    load_dotenv(dotenv_path=dotenv_path, override=False)

    values = flatten_sections(read_yaml_config(config_path))
    values.update(env_overrides())
    values.update({key: value for key, value in (overrides or {}).items() if value is not None})

    config = PipelineConfig(**values)
    logger.info(f"Loaded pipeline config (hash {config.config_hash()[:12]})")
    return config


def logging_settings(config_path: Union[str, Path] = 'config.yaml') -> Dict[str, Any]:
    """读取logging节"""
    return read_yaml_config(config_path).get('logging', {}) or {}

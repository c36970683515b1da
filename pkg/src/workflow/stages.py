"""
流水线阶段执行
每个阶段读取前置产物, 原子写出产物, 并在manifests/下记录配置哈希、输入哈希和随机种子
"""

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, TypeVar, Union

import pandas as pd
from pydantic import BaseModel, Field
from tqdm import tqdm

from .config import PipelineConfig
from ..alignment.label_builder import build_alignment_dataset, label_coverage
from ..encoding.backbone import TrainableEncoder
from ..encoding.pretrained import PretrainedEncoder
from ..encoding.text_encoder import HashEncoder, TextEncoder
from ..encoding.tiny_encoder import BpeVocabulary, TinyEncoder
from ..evaluation.error_analysis import error_breakdown
from ..evaluation.report import ablation_compare, evaluate, format_report
from ..filtering.passage_filter import expand_table_cells
from ..ingestion.corpus_io import read_jsonl, read_predictions, split_corpus, write_corpus, write_jsonl, write_predictions
from ..ingestion.data_ingestion import DataIngestionEngine
from ..ingestion.hybrid_reader import HybridCorpusReader
from ..models.data_schema import (
    AlignmentLabels,
    ExpansionRecord,
    HybridCorpus,
    PredictionRecord,
    QAExample,
    SelectionRecord
)
from ..reading.answerer import AnswerConfig, answer_question
from ..reading.instances import build_reader_instances, training_instances
from ..reading.span_reader import load_reader
from ..reading.trainer import ReaderTrainingConfig, train_reader
from ..selection.heatmap import relevance_heatmap, write_heatmap
from ..selection.selector_model import load_selector
from ..selection.trainer import ExpandedByQuestion, SelectorTrainingConfig, train_selector
from ..validation.errors import CorpusValidationError, MissingPrerequisiteError
from ..validation.validator import validate_corpus

logger = logging.getLogger(__name__)

STAGE_ORDER = [
    'ingest',
    'build-alignment-data',
    'filter-passages',
    'train-selector',
    'select-cells',
    'train-reader',
    'answer',
    'evaluate',
]
AUXILIARY_STAGES = ['heatmap']
SPLITS = ('train', 'dev')

ResultT = TypeVar('ResultT')


class StageManifest(BaseModel):
    """阶段清单: 复现一个阶段产物所需的全部信息"""
    stage: str
    config_hash: str
    seed: int
    inputs: Dict[str, str] = Field(default_factory=dict, description="输入文件 -> sha256")
    outputs: Dict[str, str] = Field(default_factory=dict, description="产物文件 -> sha256")
    created_at: str


@dataclass
class StageResult:
    """阶段执行结果"""
    stage: str
    skipped: bool
    outputs: List[Path] = field(default_factory=list)


def file_sha256(path: Union[str, Path]) -> str:
    """文件内容的sha256"""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


@contextmanager
def atomic_output(path: Union[str, Path]) -> Iterator[Path]:
    """先写临时文件, 成功后重命名为目标文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(path.name + '.tmp')
    try:
        yield tmp_path
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def write_json(payload: dict, path: Union[str, Path]) -> Path:
    path = Path(path)
    with atomic_output(path) as tmp:
        with open(tmp, 'w', encoding='utf-8') as f:
            json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
    return path


def build_filter_encoder(config: PipelineConfig) -> TextEncoder:
    """段落过滤用的编码器"""
    if config.filter_encoder == 'external':
        return PretrainedEncoder(config.pretrained_model, pooling=config.pooling, max_length=config.max_length)
    return HashEncoder(dim=config.hash_dim, seed=config.seed, max_length=config.max_length)


def build_trainable_encoder(config: PipelineConfig, corpus: HybridCorpus) -> TrainableEncoder:
    """可训练骨干; tiny编码器的BPE词表从训练语料学习"""
    if config.encoder == 'external':
        return PretrainedEncoder(config.pretrained_model, pooling=config.pooling, max_length=config.max_length)
    vocab = BpeVocabulary.from_corpus(corpus, vocab_size=config.vocab_size)
    return TinyEncoder(
        vocab,
        dim=config.encoder_dim,
        n_layers=config.encoder_layers,
        n_heads=config.encoder_heads,
        max_length=config.max_length,
        dropout=config.dropout,
        seed=config.seed
    )


class ArtifactLayout:
    """输出目录下各阶段产物的位置"""

    def __init__(self, output_dir: Union[str, Path]):
        self.root = Path(output_dir)

    def corpus(self, split: str) -> Path:
        return self.root / f'corpus.{split}.json'

    def alignment(self, split: str) -> Path:
        return self.root / f'alignment.{split}.jsonl'

    def expanded(self, split: str) -> Path:
        return self.root / f'expanded.{split}.jsonl'

    def selections(self, split: str) -> Path:
        return self.root / f'selections.{split}.jsonl'

    def predictions(self, split: str) -> Path:
        return self.root / f'predictions.{split}.jsonl'

    @property
    def selector_checkpoint(self) -> Path:
        return self.root / 'checkpoints' / 'selector.pt'

    @property
    def selector_history(self) -> Path:
        return self.root / 'checkpoints' / 'selector_history.json'

    @property
    def reader_checkpoint(self) -> Path:
        return self.root / 'checkpoints' / 'reader.pt'

    @property
    def eval_report(self) -> Path:
        return self.root / 'eval_report.json'

    @property
    def ablation_table(self) -> Path:
        return self.root / 'ablation.csv'

    @property
    def heatmap_dir(self) -> Path:
        return self.root / 'heatmaps'

    @property
    def sweep_report(self) -> Path:
        return self.root / 'sigma_sweep.json'

    def manifest(self, stage: str) -> Path:
        return self.root / 'manifests' / f'{stage}.json'


class PipelineRunner:
    """
    流水线执行器
    按阶段名执行, 输入未变且产物齐全时跳过 (除非config.force)
    """

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.layout = ArtifactLayout(config.output_dir)
        self._corpora: Dict[str, HybridCorpus] = {}
        self._handlers: Dict[str, Callable[[], List[Path]]] = {
            'ingest': self._ingest,
            'build-alignment-data': self._build_alignment_data,
            'filter-passages': self._filter_passages,
            'train-selector': self._train_selector,
            'select-cells': self._select_cells,
            'train-reader': self._train_reader,
            'answer': self._answer,
            'evaluate': self._evaluate,
            'heatmap': self._heatmap,
        }

    # ========== 阶段调度 ==========

    def requirements(self, stage: str) -> List[Tuple[Path, str]]:
        """阶段的前置产物: [(路径, 生成该产物的阶段)]"""
        layout = self.layout
        corpora = [(layout.corpus(split), 'ingest') for split in SPLITS]
        expanded = [(layout.expanded(split), 'filter-passages') for split in SPLITS]
        eval_split = self.config.eval_split

        if stage == 'ingest':
            paths = [(self.config.corpus_path, 'ingest')]
            if self.config.dev_corpus_path is not None:
                paths.append((self.config.dev_corpus_path, 'ingest'))
            return paths
        if stage in ('build-alignment-data', 'filter-passages'):
            return corpora
        if stage == 'train-selector':
            return corpora + [(layout.alignment('train'), 'build-alignment-data')] + expanded
        if stage == 'select-cells':
            return corpora + expanded + [(layout.selector_checkpoint, 'train-selector')]
        if stage == 'train-reader':
            if self.config.reader_mode == 'cell':
                return [(layout.corpus('train'), 'ingest')]
            return [
                (layout.corpus('train'), 'ingest'),
                (layout.expanded('train'), 'filter-passages'),
                (layout.selections('train'), 'select-cells'),
            ]
        if stage == 'answer':
            paths = [
                (layout.corpus(eval_split), 'ingest'),
                (layout.expanded(eval_split), 'filter-passages'),
                (layout.selections(eval_split), 'select-cells'),
            ]
            if self.config.reader_mode == 'span':
                paths.append((layout.reader_checkpoint, 'train-reader'))
            return paths
        if stage == 'evaluate':
            return [
                (layout.corpus(eval_split), 'ingest'),
                (layout.selections(eval_split), 'select-cells'),
                (layout.predictions(eval_split), 'answer'),
            ]
        if stage == 'heatmap':
            return [(layout.corpus(eval_split), 'ingest'), (layout.selector_checkpoint, 'train-selector')]
        raise ValueError(f"Unknown stage: {stage}")

    def _check_prerequisites(self, stage: str) -> List[Path]:
        paths = []
        for path, producer in self.requirements(stage):
            path = Path(path)
            if not path.exists():
                if stage == 'ingest':
                    raise FileNotFoundError(f"Corpus file not found: {path}")
                raise MissingPrerequisiteError(producer, missing=str(path))
            paths.append(path)
        return paths

    def _is_current(self, stage: str, input_hashes: Dict[str, str]) -> bool:
        manifest_path = self.layout.manifest(stage)
        if not manifest_path.exists():
            return False
        manifest = StageManifest.model_validate_json(manifest_path.read_text(encoding='utf-8'))
        if manifest.config_hash != self.config.config_hash() or manifest.inputs != input_hashes:
            return False
        return all(Path(path).exists() and file_sha256(path) == digest for path, digest in manifest.outputs.items())

    def run_stage(self, stage: str) -> StageResult:
        """
        执行一个阶段

        Args:
            stage: 阶段名

        Returns:
            StageResult

        Raises:
            MissingPrerequisiteError: 前置产物缺失, 错误信息包含应先执行的阶段
        """
        if stage not in self._handlers:
            raise ValueError(f"Unknown stage: {stage}")

        inputs = self._check_prerequisites(stage)
        input_hashes = {str(path): file_sha256(path) for path in inputs}

        if not self.config.force and self._is_current(stage, input_hashes):
            logger.info(f"Stage {stage} is up to date, skipping")
            return StageResult(stage=stage, skipped=True)

        logger.info(f"Running stage {stage}")
        outputs = self._handlers[stage]()

        manifest = StageManifest(
            stage=stage,
            config_hash=self.config.config_hash(),
            seed=self.config.seed,
            inputs=input_hashes,
            outputs={str(path): file_sha256(path) for path in outputs},
            created_at=datetime.now(timezone.utc).isoformat()
        )
        write_json(manifest.model_dump(mode='json'), self.layout.manifest(stage))
        return StageResult(stage=stage, skipped=False, outputs=outputs)

    def run_all(self, stages: Sequence[str] = STAGE_ORDER) -> List[StageResult]:
        """依次执行多个阶段"""
        return [self.run_stage(stage) for stage in stages]

    # ========== 产物读取 ==========

    def corpus(self, split: str) -> HybridCorpus:
        if split not in self._corpora:
            self._corpora[split] = HybridCorpusReader(self.layout.corpus(split)).parse_all()
        return self._corpora[split]

    def expanded(self, split: str) -> ExpandedByQuestion:
        records = read_jsonl(self.layout.expanded(split), ExpansionRecord)
        return {record.question_id: record.by_coord() for record in records}

    def selections(self, split: str) -> Dict[str, SelectionRecord]:
        records = read_jsonl(self.layout.selections(split), SelectionRecord)
        return {record.question_id: record for record in records}

    def _map_examples(
        self,
        examples: Sequence[QAExample],
        fn: Callable[[QAExample], ResultT],
        desc: str,
        thread_safe: bool = True
    ) -> List[ResultT]:
        """按样本并行处理; 结果顺序与输入一致"""
        workers = self.config.workers if thread_safe else 1
        disable = not self.config.progress
        if workers <= 1:
            return [fn(example) for example in tqdm(examples, desc=desc, disable=disable)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(fn, examples), total=len(examples), desc=desc, disable=disable))

    # ========== 各阶段 ==========

    def _ingest(self) -> List[Path]:
        config = self.config
        corpus = DataIngestionEngine().add_source(config.corpus_path, config.corpus_format).ingest_first()
        if config.dev_corpus_path is not None:
            train = corpus
            dev = DataIngestionEngine().add_source(config.dev_corpus_path, config.corpus_format).ingest_first()
        else:
            train, dev = split_corpus(corpus, config.dev_fraction, config.seed)

        result = validate_corpus(train, strict_mode=config.strict_mode)
        for warning in result.warnings[:5]:
            logger.warning(warning)
        if not result.is_valid:
            first = result.errors[0] if result.errors else result.warnings[0]
            raise CorpusValidationError(f"training corpus failed validation: {first}")

        outputs = []
        for split, data in (('train', train), ('dev', dev)):
            path = self.layout.corpus(split)
            with atomic_output(path) as tmp:
                write_corpus(data, tmp)
            self._corpora[split] = data
            outputs.append(path)
        return outputs

    def _build_alignment_data(self) -> List[Path]:
        outputs = []
        for split in SPLITS:
            labels = build_alignment_dataset(self.corpus(split))
            if labels:
                coverage = label_coverage(labels)
                logger.info(f"Alignment label coverage ({split}):\n{coverage.to_string(index=False)}")
            path = self.layout.alignment(split)
            with atomic_output(path) as tmp:
                write_jsonl(labels, tmp, by_alias=True)
            outputs.append(path)
        return outputs

    def _filter_passages(self) -> List[Path]:
        config = self.config
        encoder = build_filter_encoder(config)
        outputs = []
        for split in SPLITS:
            corpus = self.corpus(split)

            def expand(example: QAExample) -> ExpansionRecord:
                cells = expand_table_cells(
                    example.question,
                    corpus.table_for(example),
                    corpus.passages,
                    config.filter_k,
                    config.token_budget,
                    encoder,
                    config.similarity
                )
                return ExpansionRecord(
                    question_id=example.question_id,
                    table_id=example.table_id,
                    cells=[cells[coord] for coord in sorted(cells)]
                )

            records = self._map_examples(corpus.examples, expand, f"filter {split}", encoder.thread_safe)
            records.sort(key=lambda record: record.question_id)
            path = self.layout.expanded(split)
            with atomic_output(path) as tmp:
                write_jsonl(records, tmp, by_alias=True)
            outputs.append(path)
        return outputs

    def _train_selector(self) -> List[Path]:
        config = self.config
        train, dev = self.corpus('train'), self.corpus('dev')
        labels = read_jsonl(self.layout.alignment('train'), AlignmentLabels)
        expanded = self.expanded('train')
        expanded.update(self.expanded('dev'))

        result = train_selector(
            train,
            labels,
            SelectorTrainingConfig(
                sigma=config.sigma,
                lr=config.lr,
                batch_size=config.batch,
                epochs=config.epochs,
                seed=config.seed,
                weight_decay=config.weight_decay,
                max_grad_norm=config.max_grad_norm,
                progress=config.progress
            ),
            build_trainable_encoder(config, train),
            dev_corpus=dev if dev.examples else None,
            expanded=expanded,
            checkpoint_path=self.layout.selector_checkpoint
        )
        write_json({
            'sigma': config.sigma,
            'best_epoch': result.best_epoch,
            'history': [record.model_dump(mode='json') for record in result.history],
        }, self.layout.selector_history)
        return [self.layout.selector_checkpoint, self.layout.selector_history]

    def _select_cells(self) -> List[Path]:
        model = load_selector(self.layout.selector_checkpoint)
        outputs = []
        for split in SPLITS:
            corpus = self.corpus(split)
            expanded = self.expanded(split)

            def select(example: QAExample) -> SelectionRecord:
                sheet = model.score_table(example.question, corpus.table_for(example), expanded.get(example.question_id))
                return SelectionRecord.from_sheet(example.question_id, example.table_id, sheet, self.config.k)

            records = self._map_examples(corpus.examples, select, f"select {split}", model.encoder.thread_safe)
            records.sort(key=lambda record: record.question_id)
            path = self.layout.selections(split)
            with atomic_output(path) as tmp:
                write_jsonl(records, tmp, by_alias=True)
            outputs.append(path)
        return outputs

    def _train_reader(self) -> List[Path]:
        config = self.config
        if config.reader_mode == 'cell':
            logger.info("Reader mode is 'cell', no reader to train")
            return []

        corpus = self.corpus('train')
        expanded = self.expanded('train')
        selections = self.selections('train')

        groups = []
        for example in corpus.examples:
            record = selections.get(example.question_id)
            if record is None or not example.answer_text:
                continue
            groups.append(build_reader_instances(
                example, record.topk, corpus.table_for(example), expanded.get(example.question_id)
            ))
        instances = training_instances(groups, clean=config.clean_instances)

        train_reader(
            instances,
            ReaderTrainingConfig(
                lr=config.lr,
                batch_size=config.batch,
                epochs=config.epochs,
                seed=config.seed,
                weight_decay=config.weight_decay,
                max_grad_norm=config.max_grad_norm,
                max_span_length=config.max_span_length,
                progress=config.progress
            ),
            build_trainable_encoder(config, corpus),
            checkpoint_path=self.layout.reader_checkpoint
        )
        return [self.layout.reader_checkpoint]

    def _answer(self) -> List[Path]:
        config = self.config
        split = config.eval_split
        corpus = self.corpus(split)
        expanded = self.expanded(split)
        selections = self.selections(split)
        reader = load_reader(self.layout.reader_checkpoint) if config.reader_mode == 'span' else None
        answer_config = AnswerConfig(k=config.k, mu=config.mu, mode=config.reader_mode)

        examples = [example for example in corpus.examples if example.question_id in selections]
        if len(examples) < len(corpus.examples):
            logger.warning(f"{len(corpus.examples) - len(examples)} examples have no cell selection")

        def answer(example: QAExample) -> PredictionRecord:
            return answer_question(
                example,
                selections[example.question_id].to_sheet(),
                corpus.table_for(example),
                reader,
                answer_config,
                expanded.get(example.question_id)
            )

        thread_safe = reader is None or reader.encoder.thread_safe
        predictions = self._map_examples(examples, answer, f"answer {split}", thread_safe)
        predictions.sort(key=lambda record: record.question_id)

        path = self.layout.predictions(split)
        with atomic_output(path) as tmp:
            write_predictions(predictions, tmp)
        return [path]

    def _evaluate(self) -> List[Path]:
        split = self.config.eval_split
        corpus = self.corpus(split)
        rankings = {qid: record.ranking for qid, record in self.selections(split).items()}

        report = evaluate(read_predictions(self.layout.predictions(split)), corpus, rankings)
        breakdown = error_breakdown(rankings, corpus)
        logger.info(f"Evaluation ({split}):\n{format_report(report)}")

        write_json({
            'split': split,
            'config_hash': self.config.config_hash(),
            'report': report.model_dump(mode='json'),
            'error_breakdown': breakdown,
        }, self.layout.eval_report)
        return [self.layout.eval_report]

    def _heatmap(self) -> List[Path]:
        config = self.config
        corpus = self.corpus(config.eval_split)
        encoder = load_selector(self.layout.selector_checkpoint).encoder

        outputs = []
        for example in corpus.examples[:config.heatmap_limit]:
            frame = relevance_heatmap(
                example.question, corpus.table_for(example).headers, encoder, normalize=config.heatmap_normalize
            )
            path = self.layout.heatmap_dir / f'{example.question_id}.csv'
            with atomic_output(path) as tmp:
                write_heatmap(frame, tmp)
            outputs.append(path)
        logger.info(f"Wrote {len(outputs)} heatmaps to {self.layout.heatmap_dir}")
        return outputs

    # ========== 消融对比 ==========

    def compare_ablation(
        self,
        predictions_without: Union[str, Path],
        selections_without: Optional[Union[str, Path]] = None
    ) -> pd.DataFrame:
        """
        当前运行 (with) 与另一组预测 (without) 的指标差

        Args:
            predictions_without: 对照组预测文件
            selections_without: 对照组单元格选择文件 (提供时比较Hits@k/MRR)

        Returns:
            差值表, 同时写出ablation.csv
        """
        split = self.config.eval_split
        for path, producer in ((self.layout.predictions(split), 'answer'), (self.layout.selections(split), 'select-cells')):
            if not path.exists():
                raise MissingPrerequisiteError(producer, missing=str(path))

        corpus = self.corpus(split)
        rankings_with = {qid: record.ranking for qid, record in self.selections(split).items()}
        rankings_without = None
        if selections_without is not None:
            rankings_without = {
                record.question_id: record.ranking for record in read_jsonl(selections_without, SelectionRecord)
            }

        report_with = evaluate(read_predictions(self.layout.predictions(split)), corpus, rankings_with)
        report_without = evaluate(read_predictions(predictions_without), corpus, rankings_without)
        table = ablation_compare(report_with, report_without)

        with atomic_output(self.layout.ablation_table) as tmp:
            table.to_csv(tmp, index=False, float_format='%.6f')
        return table


def run_stage(stage: str, config: PipelineConfig) -> StageResult:
    """便捷函数: 执行一个阶段"""
    return PipelineRunner(config).run_stage(stage)

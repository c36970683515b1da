"""
语料与预测结果的持久化
统一语料JSON、逐行JSON (预测、对齐标签等)
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Iterable, List, Tuple, Type, TypeVar, Union

from pydantic import BaseModel

from ..models.data_schema import HybridCorpus, PredictionRecord

logger = logging.getLogger(__name__)

ModelT = TypeVar('ModelT', bound=BaseModel)


def corpus_to_dict(corpus: HybridCorpus) -> dict:
    """转换为统一语料JSON结构"""
    tables = []
    for table in corpus.tables.values():
        tables.append({
            'id': table.table_id,
            'headers': list(table.headers),
            'rows': [[cell.text for cell in row] for row in table.rows],
            'links': [[list(cell.passage_ids) for cell in row] for row in table.rows],
        })

    passages = {
        pid: {'title': passage.title, 'sentences': list(passage.sentences)}
        for pid, passage in corpus.passages.items()
    }

    examples = [
        {
            'qid': ex.question_id,
            'table_id': ex.table_id,
            'question': ex.question,
            'answer': ex.answer_text,
            'source': ex.source.value,
            'gold_cell': list(ex.gold_cell) if ex.gold_cell is not None else None,
        }
        for ex in corpus.examples
    ]
    return {'tables': tables, 'passages': passages, 'examples': examples}


def write_corpus(corpus: HybridCorpus, path: Union[str, Path]) -> Path:
    """
    写出统一语料JSON

    Args:
        corpus: 语料
        path: 输出路径

    Returns:
        输出路径
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(corpus_to_dict(corpus), f, ensure_ascii=False, indent=1, sort_keys=True)
    logger.info(
        f"Wrote corpus to {path}: {len(corpus.tables)} tables, "
        f"{len(corpus.passages)} passages, {len(corpus.examples)} examples"
    )
    return path


def write_jsonl(records: Iterable[BaseModel], path: Union[str, Path], by_alias: bool = False) -> int:
    """逐行写出pydantic模型, 返回行数"""
    path = Path(path)
    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(record.model_dump_json(by_alias=by_alias))
            f.write('\n')
            count += 1
    return count


def read_jsonl(path: Union[str, Path], model: Type[ModelT]) -> List[ModelT]:
    """逐行读取为pydantic模型"""
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line:
                records.append(model.model_validate_json(line))
    return records


def write_predictions(records: List[PredictionRecord], path: Union[str, Path]) -> None:
    """
    写出预测结果 (每行一个JSON, 保持顺序)

    格式: {"qid", "answer", "cell": [r, c], "row_prob", "col_prob", "span_score"}
    """
    count = write_jsonl(records, path, by_alias=True)
    logger.info(f"Wrote {count} predictions to {path}")


def read_predictions(path: Union[str, Path]) -> List[PredictionRecord]:
    """读取预测结果"""
    return read_jsonl(path, PredictionRecord)


def split_corpus(
    corpus: HybridCorpus,
    dev_fraction: float,
    seed: int
) -> Tuple[HybridCorpus, HybridCorpus]:
    """
    按表格确定性划分训练/验证集

    同一张表的所有问题落在同一侧, 验证集问题来自未见过的表格

    Args:
        corpus: 完整语料
        dev_fraction: 验证集表格比例
        seed: 随机种子 (参与哈希)

    Returns:
        (训练集, 验证集)
    """
    if not 0.0 <= dev_fraction < 1.0:
        raise ValueError(f"dev_fraction must be within [0, 1), got {dev_fraction}")

    def bucket(table_id: str) -> float:
        digest = hashlib.sha256(f"{seed}:{table_id}".encode('utf-8')).hexdigest()
        return int(digest[:8], 16) / 0xFFFFFFFF

    dev_ids = {tid for tid in corpus.tables if bucket(tid) < dev_fraction}

    def subset(table_ids) -> HybridCorpus:
        tables = {tid: t for tid, t in corpus.tables.items() if tid in table_ids}
        examples = [ex for ex in corpus.examples if ex.table_id in table_ids]
        linked = {pid for t in tables.values() for cell in t.iter_cells() for pid in cell.passage_ids}
        passages = {pid: p for pid, p in corpus.passages.items() if pid in linked}
        return HybridCorpus(tables=tables, passages=passages, examples=examples)

    train_ids = set(corpus.tables) - dev_ids
    train, dev = subset(train_ids), subset(dev_ids)
    logger.info(f"Split corpus: {len(train.examples)} train / {len(dev.examples)} dev examples")
    return train, dev

"""
评估报告
汇总EM/F1 (总体及按答案来源)、Hits@k、MRR和行/列选择准确率
"""

import logging
from collections import defaultdict
from typing import Dict, List, Mapping, Optional, Sequence

import pandas as pd

from .metrics import exact_match, hits_at_k, mean, mrr, rank_of_gold, row_col_accuracy, token_f1
from ..models.data_schema import EvalReport, HybridCorpus, PredictionRecord, RankedCell

logger = logging.getLogger(__name__)

DEFAULT_KS = (1, 3, 5)


def evaluate(
    predictions: Sequence[PredictionRecord],
    corpus: HybridCorpus,
    rankings: Optional[Mapping[str, Sequence[RankedCell]]] = None,
    ks: Sequence[int] = DEFAULT_KS,
    row_col_k: int = 1
) -> EvalReport:
    """
    生成评估报告

    没有预测的样本按空答案计分; 选择指标只在有金标单元格和排序的样本上计算

    Args:
        predictions: 预测记录
        corpus: 金标语料
        rankings: question_id -> 单元格排序 (可选)
        ks: Hits@k的k值
        row_col_k: 行/列准确率使用的top-k

    Returns:
        EvalReport
    """
    by_id = {record.question_id: record for record in predictions}
    unknown = set(by_id) - {example.question_id for example in corpus.examples}
    if unknown:
        logger.warning(f"{len(unknown)} predictions do not match any example")

    ems: List[float] = []
    f1s: List[float] = []
    per_source: Dict[str, Dict[str, List[float]]] = defaultdict(lambda: {'em': [], 'f1': []})
    missing = 0
    for example in corpus.examples:
        record = by_id.get(example.question_id)
        if record is None:
            missing += 1
        answer = record.answer if record is not None else ""
        em = exact_match(answer, example.answer_text)
        f1 = token_f1(answer, example.answer_text)
        ems.append(em)
        f1s.append(f1)
        per_source[example.source.value]['em'].append(em)
        per_source[example.source.value]['f1'].append(f1)
    if missing:
        logger.warning(f"{missing} examples have no prediction")

    by_source = {
        source: {'em': mean(values['em']), 'f1': mean(values['f1']), 'n': float(len(values['em']))}
        for source, values in sorted(per_source.items())
    }

    hits: Dict[int, float] = {}
    mrr_value = row_acc = col_acc = None
    if rankings is not None:
        selected = [
            (rankings[example.question_id], example.gold_cell)
            for example in corpus.examples
            if example.gold_cell is not None and example.question_id in rankings
        ]
        if selected:
            ranks = [rank_of_gold(ranking, gold) for ranking, gold in selected]
            hits = {k: mean([hits_at_k(rank, k) for rank in ranks]) for k in sorted(ks)}
            mrr_value = mean([mrr(rank) for rank in ranks])
            row_acc, col_acc = row_col_accuracy(
                [ranking for ranking, _ in selected], [gold for _, gold in selected], row_col_k
            )

    report = EvalReport(
        em=mean(ems),
        f1=mean(f1s),
        by_source=by_source,
        hits=hits,
        mrr=mrr_value,
        row_acc=row_acc,
        col_acc=col_acc,
        n=len(corpus.examples)
    )
    logger.info(f"Evaluated {report.n} examples: EM={report.em:.4f}, F1={report.f1:.4f}")
    return report


def _metric_values(report: EvalReport) -> Dict[str, Optional[float]]:
    values: Dict[str, Optional[float]] = {'em': report.em, 'f1': report.f1}
    for k in sorted(report.hits):
        values[f'hits@{k}'] = report.hits[k]
    values['mrr'] = report.mrr
    values['row_acc'] = report.row_acc
    values['col_acc'] = report.col_acc
    return values


def ablation_compare(report_with: EvalReport, report_without: EvalReport) -> pd.DataFrame:
    """
    消融对比: 每个指标的差值 (with - without)

    Returns:
        DataFrame, 列为 metric / with / without / delta; 任一侧缺失的指标被跳过
    """
    with_values = _metric_values(report_with)
    without_values = _metric_values(report_without)

    rows = []
    for metric, value in with_values.items():
        other = without_values.get(metric)
        if value is None or other is None:
            continue
        rows.append({'metric': metric, 'with': value, 'without': other, 'delta': value - other})
    return pd.DataFrame(rows, columns=['metric', 'with', 'without', 'delta'])


def format_report(report: EvalReport) -> str:
    """可读的报告表格 (百分数)"""
    overall = pd.DataFrame(
        [(metric, value * 100) for metric, value in _metric_values(report).items() if value is not None],
        columns=['metric', 'value(%)']
    )
    lines = [f"Examples: {report.n}", overall.to_string(index=False, float_format='%.2f')]

    if report.by_source:
        per_source = pd.DataFrame([
            {'source': source, 'n': int(values['n']), 'em(%)': values['em'] * 100, 'f1(%)': values['f1'] * 100}
            for source, values in report.by_source.items()
        ])
        lines.append(per_source.to_string(index=False, float_format='%.2f'))

    return "\n\n".join(lines)

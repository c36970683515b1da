"""
语料验证器
验证语料完整性、一致性和答案监督质量
"""

from collections import Counter
from typing import List, Dict, Any
import logging

from ..evaluation.metrics import normalize_answer
from ..models.data_schema import AnswerSource, HybridCorpus

logger = logging.getLogger(__name__)


class ValidationResult:
    """验证结果类"""

    def __init__(self):
        self.is_valid: bool = True
        self.errors: List[str] = []
        self.warnings: List[str] = []
        self.score: float = 100.0  # 数据质量评分 (0-100)
        self.stats: Dict[str, Any] = {}

    def add_error(self, message: str):
        """添加错误"""
        self.errors.append(message)
        self.is_valid = False
        self.score = max(0, self.score - 10)  # 每个错误扣10分

    def add_warning(self, message: str):
        """添加警告"""
        self.warnings.append(message)
        self.score = max(0, self.score - 2)  # 每个警告扣2分

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            'is_valid': self.is_valid,
            'errors': self.errors,
            'warnings': self.warnings,
            'error_count': len(self.errors),
            'warning_count': len(self.warnings),
            'score': round(self.score, 2),
            'stats': self.stats
        }


class CorpusValidator:
    """
    语料验证器
    加载阶段已保证结构约束, 这里检查监督信号的质量
    """

    # 同类警告最多逐条记录的数量
    MAX_DETAILED_WARNINGS = 5

    def __init__(self, strict_mode: bool = False):
        """
        初始化验证器

        Args:
            strict_mode: 严格模式,警告也会导致验证失败
        """
        self.strict_mode = strict_mode

    def validate_corpus(self, corpus: HybridCorpus) -> ValidationResult:
        """
        验证完整语料

        Args:
            corpus: 语料

        Returns:
            ValidationResult对象
        """
        result = ValidationResult()

        logger.info("Starting corpus validation")

        self._validate_completeness(corpus, result)
        self._validate_references(corpus, result)
        self._validate_gold_cells(corpus, result)
        self._collect_statistics(corpus, result)

        # 严格模式: 有警告也视为失败
        if self.strict_mode and result.warnings:
            result.is_valid = False

        logger.info(
            f"Validation completed: "
            f"is_valid={result.is_valid}, "
            f"errors={len(result.errors)}, "
            f"warnings={len(result.warnings)}, "
            f"score={result.score}"
        )

        return result

    def _validate_completeness(self, corpus: HybridCorpus, result: ValidationResult):
        """验证数据完整性"""
        if not corpus.tables:
            result.add_error("No tables found")
        if not corpus.examples:
            result.add_error("No examples found")

        unused = set(corpus.tables) - {ex.table_id for ex in corpus.examples}
        if unused:
            result.add_warning(f"{len(unused)} tables are not referenced by any example")

    def _validate_references(self, corpus: HybridCorpus, result: ValidationResult):
        """验证样本和链接引用"""
        for ex in corpus.examples:
            if ex.table_id not in corpus.tables:
                result.add_error(f"Example {ex.question_id} references unknown table {ex.table_id}")

        for table in corpus.tables.values():
            for cell in table.iter_cells():
                for pid in cell.passage_ids:
                    if pid not in corpus.passages:
                        result.add_error(
                            f"Table {table.table_id} cell {cell.coord} links missing passage {pid}"
                        )

    def _validate_gold_cells(self, corpus: HybridCorpus, result: ValidationResult):
        """in_table样本的金标单元格应包含答案"""
        mismatched = []
        for ex in corpus.examples:
            if ex.source != AnswerSource.IN_TABLE or ex.gold_cell is None:
                continue
            table = corpus.tables.get(ex.table_id)
            if table is None:
                continue
            cell_text = normalize_answer(table.cell(*ex.gold_cell).text)
            if normalize_answer(ex.answer_text) not in cell_text:
                mismatched.append(ex.question_id)

        for qid in mismatched[:self.MAX_DETAILED_WARNINGS]:
            result.add_warning(f"Gold cell of {qid} does not contain the answer")
        if len(mismatched) > self.MAX_DETAILED_WARNINGS:
            result.add_warning(
                f"... {len(mismatched) - self.MAX_DETAILED_WARNINGS} more gold cells without the answer"
            )

    def _collect_statistics(self, corpus: HybridCorpus, result: ValidationResult):
        """统计答案来源分布和金标覆盖率"""
        sources = Counter(ex.source.value for ex in corpus.examples)
        with_gold = sum(ex.gold_cell is not None for ex in corpus.examples)
        result.stats = {
            'tables': len(corpus.tables),
            'passages': len(corpus.passages),
            'examples': len(corpus.examples),
            'with_gold_cell': with_gold,
            'sources': dict(sorted(sources.items())),
        }
        if corpus.examples and with_gold == 0:
            result.add_warning("No example carries a gold cell; cell selection cannot be trained")


def validate_corpus(corpus: HybridCorpus, strict_mode: bool = False) -> ValidationResult:
    """便捷函数: 验证语料"""
    return CorpusValidator(strict_mode=strict_mode).validate_corpus(corpus)

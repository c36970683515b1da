"""
异常定义
CLI根据异常类型映射退出码
"""

from typing import Optional


class HybridQAError(Exception):
    """系统异常基类"""


class CorpusParseError(HybridQAError, ValueError):
    """语料记录无法解析"""

    def __init__(self, message: str, file: Optional[str] = None, record: Optional[str] = None):
        self.file = file
        self.record = record
        location = ", ".join(
            part for part in (
                f"file={file}" if file else "",
                f"record={record}" if record else ""
            ) if part
        )
        super().__init__(f"{message} ({location})" if location else message)


class CorpusValidationError(HybridQAError, ValueError):
    """语料违反数据约束 (如非矩形表格、空答案)"""

    def __init__(self, message: str, record_id: Optional[str] = None):
        self.record_id = record_id
        super().__init__(f"{record_id}: {message}" if record_id else message)


class MissingPrerequisiteError(HybridQAError, RuntimeError):
    """流水线阶段缺少前置产物"""

    def __init__(self, required_stage: str, missing: Optional[str] = None):
        self.required_stage = required_stage
        self.missing = missing
        message = f"{required_stage} required"
        if missing:
            message += f" (missing {missing})"
        super().__init__(message)

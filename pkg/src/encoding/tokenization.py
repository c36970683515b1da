"""
基础分词
按空白和标点切分并小写, 所有编码器共用
"""

import logging
import re
from typing import List, Tuple

logger = logging.getLogger(__name__)

# 组合附加符号归入前面的词
_COMBINING = "\u0300-\u036f\u1ab0-\u1aff\u1dc0-\u1dff\u20d0-\u20ff\ufe20-\ufe2f"
_TOKEN_PATTERN = re.compile(rf"\w[\w{_COMBINING}]*|[^\w\s]", re.UNICODE)

# 序列对编码使用的哨兵词元
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
EMPTY_TOKEN = "[EMPTY]"
UNK_TOKEN = "[UNK]"
PAD_TOKEN = "[PAD]"
SPECIAL_TOKENS = [PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, EMPTY_TOKEN]


def basic_tokenize(text: str) -> List[str]:
    """空白+标点切分, 切分后逐词小写"""
    return [m.group().lower() for m in _TOKEN_PATTERN.finditer(text)]


def token_offsets(text: str) -> List[Tuple[int, int]]:
    """每个词元在原文中的字符区间, 与basic_tokenize一一对应"""
    return [m.span() for m in _TOKEN_PATTERN.finditer(text)]


def build_pair_tokens(
    tokens_a: List[str],
    tokens_b: List[str],
    max_length: int
) -> Tuple[List[str], List[int], int]:
    """
    拼接序列对: [CLS] a [SEP] b [SEP]

    超长时从右侧截断b, 不截断a; a本身超长时截断a的右侧 (b全部丢弃)

    Args:
        tokens_a: 第一序列 (问题)
        tokens_b: 第二序列 (行/列/上下文)
        max_length: 最大长度 (含哨兵)

    Returns:
        (词元列表, 段落ID列表, b在序列中的起始位置)
    """
    if max_length < 3:
        raise ValueError(f"max_length must be >= 3, got {max_length}")

    budget = max_length - 3
    if len(tokens_a) > budget:
        logger.warning(f"First sequence of {len(tokens_a)} tokens truncated to {budget}")
        tokens_a = tokens_a[:budget]
    tokens_b = tokens_b[:budget - len(tokens_a)]

    tokens = [CLS_TOKEN] + tokens_a + [SEP_TOKEN] + tokens_b + [SEP_TOKEN]
    segments = [0] * (len(tokens_a) + 2) + [1] * (len(tokens_b) + 1)
    return tokens, segments, len(tokens_a) + 2

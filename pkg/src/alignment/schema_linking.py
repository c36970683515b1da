"""
模式链接规则
基于列名 (name-based) 和单元格值 (value-based) 把问题对齐到表格列, 以及桥接实体检测
"""

import logging
import re
from typing import Dict, List, Optional, Set, Tuple

from ..encoding.tokenization import basic_tokenize
from ..evaluation.metrics import normalize_answer
from ..models.data_schema import BridgeCandidate, BridgeMatch, Passage, Table

logger = logging.getLogger(__name__)


# 英文停用词: 冠词、介词、助动词、疑问词等
STOPWORDS = frozenset({
    'a', 'an', 'the',
    'of', 'in', 'on', 'at', 'by', 'for', 'with', 'from', 'to', 'into', 'onto', 'upon',
    'about', 'as', 'after', 'before', 'during', 'over', 'under', 'between', 'through',
    'and', 'or', 'but', 'nor', 'than', 'that', 'this', 'these', 'those', 'which', 'who',
    'whom', 'whose', 'what', 'when', 'where', 'why', 'how',
    'is', 'are', 'was', 'were', 'be', 'been', 'being', 'am',
    'do', 'does', 'did', 'has', 'have', 'had', 'having',
    'will', 'would', 'shall', 'should', 'can', 'could', 'may', 'might', 'must',
    'it', 'its', 'he', 'she', 'they', 'them', 'his', 'her', 'their', 'there',
    'not', 'no', 'so', 'if', 'also', 'such', 'any', 'each',
})

ORDINAL_WORDS = {
    'first': '1', 'second': '2', 'third': '3', 'fourth': '4', 'fifth': '5',
    'sixth': '6', 'seventh': '7', 'eighth': '8', 'ninth': '9', 'tenth': '10',
    'eleventh': '11', 'twelfth': '12', 'thirteenth': '13', 'fourteenth': '14',
    'fifteenth': '15', 'sixteenth': '16', 'seventeenth': '17', 'eighteenth': '18',
    'nineteenth': '19', 'twentieth': '20',
}

_ORDINAL_SUFFIX = re.compile(r'^(\d+)(st|nd|rd|th)$')

# 单元格值n-gram匹配的最大长度
MAX_VALUE_NGRAM = 5


def light_stem(token: str) -> str:
    """
    朴素后缀词干: 去掉复数 -es / -s

    只处理 s/x/z/ch/sh 后的 -es, 其余去 -s (不处理 -ss)
    """
    if len(token) > 4 and token.endswith('es') and token[:-2].endswith(('s', 'x', 'z', 'ch', 'sh')):
        return token[:-2]
    if len(token) > 3 and token.endswith('s') and not token.endswith('ss'):
        return token[:-1]
    return token


def content_tokens(text: str) -> List[str]:
    """小写分词, 去掉停用词、标点和单字符词元, 做轻量词干"""
    tokens = []
    for token in basic_tokenize(text):
        if not token.isalnum() or token in STOPWORDS:
            continue
        if len(token) < 2 and not token.isdigit():
            continue
        tokens.append(light_stem(token))
    return tokens


def normalize_value_tokens(text: str) -> List[str]:
    """
    值匹配用的归一化: 小写、序数词转数字、去标点

    "the second most" -> ["the", "2", "most"]
    """
    tokens = []
    for token in basic_tokenize(text):
        if not token.isalnum():
            continue
        if token in ORDINAL_WORDS:
            token = ORDINAL_WORDS[token]
        else:
            match = _ORDINAL_SUFFIX.match(token)
            if match:
                token = str(int(match.group(1)))
        tokens.append(token)
    return tokens


def _contains_ngram(haystack: List[str], needle: List[str]) -> bool:
    width = len(needle)
    return any(haystack[i:i + width] == needle for i in range(len(haystack) - width + 1))


def name_based_links(question: str, headers: List[str]) -> Set[int]:
    """
    列名链接: 表头的任一内容词元作为词元出现在问题中

    Args:
        question: 问题
        headers: 表头列表

    Returns:
        命中的列下标集合
    """
    if not headers:
        raise ValueError("headers must be non-empty")

    question_tokens = set(content_tokens(question))
    links = set()
    for j, header in enumerate(headers):
        if question_tokens.intersection(content_tokens(header)):
            links.add(j)
    return links


def value_based_links(question: str, table: Table) -> Set[int]:
    """
    值链接: 列中某个单元格值 (归一化后) 作为连续n-gram出现在问题中

    只考虑长度不超过MAX_VALUE_NGRAM且不全是停用词的单元格值

    Args:
        question: 问题
        table: 表格

    Returns:
        命中的列下标集合
    """
    question_tokens = normalize_value_tokens(question)
    links = set()
    for j in range(table.n_cols):
        for cell in table.column(j):
            value = normalize_value_tokens(cell.text)
            if not value or len(value) > MAX_VALUE_NGRAM:
                continue
            if all(token in STOPWORDS for token in value):
                continue
            if _contains_ngram(question_tokens, value):
                links.add(j)
                break
    return links


def _normalize_title(text: str) -> str:
    return normalize_answer(text)


def find_bridge_cells(table: Table, passages: Dict[str, Passage]) -> List[BridgeCandidate]:
    """
    桥接实体检测: 单元格文本等于其链接段落的标题

    Args:
        table: 表格
        passages: 段落字典

    Returns:
        BridgeCandidate列表 (行优先顺序)
    """
    candidates = []
    for cell in table.iter_cells():
        if not cell.text.strip():
            continue
        for pid in cell.passage_ids:
            passage = passages.get(pid)
            if passage is None:
                continue
            if cell.text == passage.title:
                kind: Optional[BridgeMatch] = BridgeMatch.TITLE_EXACT
            elif _normalize_title(cell.text) == _normalize_title(passage.title):
                kind = BridgeMatch.TITLE_NORMALIZED
            else:
                kind = None
            if kind is not None:
                candidates.append(BridgeCandidate(cell=cell.coord, passage_id=pid, match_kind=kind))
    return candidates


def bridge_at(candidates: List[BridgeCandidate], cell: Optional[Tuple[int, int]]) -> Optional[BridgeCandidate]:
    """返回位于指定单元格的第一个桥接候选"""
    if cell is None:
        return None
    for candidate in candidates:
        if candidate.cell == tuple(cell):
            return candidate
    return None

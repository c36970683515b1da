"""
表格行线性化
"The <表头> is <单元格> ." 模板
"""

from ..models.data_schema import Table


def linearize_row(table: Table, i: int) -> str:
    """
    把第i行渲染为句子序列

    Args:
        table: 表格
        i: 行下标

    Returns:
        "The {header} is {cell} ." 按列顺序拼接; 空单元格为 "The {header} is ."
    """
    if not 0 <= i < table.n_rows:
        raise IndexError(f"Row {i} out of range for table {table.table_id} with {table.n_rows} rows")

    clauses = []
    for header, cell in zip(table.headers, table.rows[i]):
        text = cell.text.strip()
        clauses.append(f"The {header} is {text} ." if text else f"The {header} is .")
    return " ".join(clauses)

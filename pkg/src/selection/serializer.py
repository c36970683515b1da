"""
行/列序列化
把表格的一行或一列渲染成序列对分类的第二序列
"""

from typing import Dict, Optional

from ..models.data_schema import CellCoord, ExpandedCell, Table


def _cell_text(table: Table, i: int, j: int, expanded: Optional[Dict[CellCoord, ExpandedCell]]) -> str:
    if expanded:
        cell = expanded.get((i, j))
        if cell is not None:
            return cell.text
    return table.cell(i, j).text


def serialize_row(table: Table, i: int, expanded: Optional[Dict[CellCoord, ExpandedCell]] = None) -> str:
    """
    序列化第i行: "header_1 : cell_1 | header_2 : cell_2 | ..."

    Args:
        table: 表格
        i: 行下标
        expanded: 可选的扩展单元格, 存在时使用扩展文本

    Returns:
        行字符串
    """
    if not 0 <= i < table.n_rows:
        raise IndexError(f"Row {i} out of range for table {table.table_id} with {table.n_rows} rows")
    return " | ".join(
        f"{header} : {_cell_text(table, i, j, expanded)}" for j, header in enumerate(table.headers)
    )


def serialize_column(table: Table, j: int, expanded: Optional[Dict[CellCoord, ExpandedCell]] = None) -> str:
    """序列化第j列: "header : cell_1 | cell_2 | ...", 有扩展单元格时使用扩展文本"""
    if not 0 <= j < table.n_cols:
        raise IndexError(f"Column {j} out of range for table {table.table_id} with {table.n_cols} columns")
    return f"{table.headers[j]} : " + " | ".join(_cell_text(table, i, j, expanded) for i in range(table.n_rows))

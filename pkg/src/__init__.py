"""
混合表格-文本问答流水线
Main package initialization
"""

__version__ = "1.0.0"

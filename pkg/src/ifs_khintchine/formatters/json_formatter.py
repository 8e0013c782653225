import json
from typing import Any, Tuple

from ..models.results import ResultTable
from .base import BaseFormatter, render_value


class JSONLinesFormatter(BaseFormatter):
    """One JSON object per table row, keys in column order."""

    extension = "jsonl"

    def format_header(self, table: ResultTable) -> str:
        return ""

    def format_row(self, table: ResultTable, row: Tuple[Any, ...]) -> str:
        record = {column: render_value(value) for column, value in zip(table.columns, row)}
        return json.dumps(record, ensure_ascii=False)

    def format_footer(self, table: ResultTable) -> str:
        return ""

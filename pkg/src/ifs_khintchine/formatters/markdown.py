"""
Markdown summaries of result tables.
"""

from typing import Any, Tuple

from ..models.results import ResultTable
from .base import BaseFormatter, render_value


class MarkdownFormatter(BaseFormatter):
    """Formats a table as a markdown report: claim, observations, then the rows."""

    extension = "md"

    def __init__(self, file=None, include_rows: bool = True, **kwargs):
        super().__init__(file)
        self.include_rows = include_rows

    def format_header(self, table: ResultTable) -> str:
        lines = [f"# {table.name}", ""]
        if table.claim:
            lines.extend([f"**Claim:** {table.claim}", ""])
        if table.summary:
            lines.append("## Observed")
            lines.append("")
            lines.extend(f"- {note}" for note in table.summary)
            lines.append("")
        if self.include_rows and table.rows:
            lines.append("| " + " | ".join(table.columns) + " |")
            lines.append("|" + "---|" * len(table.columns))
        return "\n".join(lines).rstrip("\n")

    def format_row(self, table: ResultTable, row: Tuple[Any, ...]) -> str:
        if not self.include_rows:
            return ""
        cells = ["" if value is None else str(value) for value in map(render_value, row)]
        return "| " + " | ".join(cells) + " |"

    def format_footer(self, table: ResultTable) -> str:
        return ""

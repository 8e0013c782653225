import csv
from io import StringIO
from typing import Any, Iterable, Optional, TextIO, Tuple

from ..models.results import ResultTable
from .base import BaseFormatter, render_value


class CSVFormatter(BaseFormatter):
    """Comma separated rows under one line of column names."""

    extension = "csv"

    def __init__(
        self,
        file: Optional[TextIO] = None,
        include_headers: bool = True,
        delimiter: str = ',',
        quotechar: str = '"',
        **kwargs,
    ):
        super().__init__(file)
        self.include_headers = include_headers
        self.delimiter = delimiter
        self.quotechar = quotechar

    def _line(self, cells: Iterable[Any]) -> str:
        buffer = StringIO()
        csv.writer(
            buffer,
            delimiter=self.delimiter,
            quotechar=self.quotechar,
            quoting=csv.QUOTE_MINIMAL,
            lineterminator="\n",
        ).writerow(cells)
        return buffer.getvalue()[:-1]

    def format_header(self, table: ResultTable) -> str:
        return self._line(table.columns) if self.include_headers else ""

    def format_row(self, table: ResultTable, row: Tuple[Any, ...]) -> str:
        # Missing values become empty cells
        cells = (render_value(value) for value in row)
        return self._line("" if cell is None else cell for cell in cells)

    def format_footer(self, table: ResultTable) -> str:
        return ""

"""
Shared pieces of the result table formatters.
"""

import math
from abc import ABC, abstractmethod
from fractions import Fraction
from typing import Any, Optional, TextIO, Tuple

from ..models.results import ResultTable

FLOAT_FORMAT = ".12g"


def render_value(value: Any) -> Any:
    """
    Normalise a cell for output.

    Floats (and numpy or mpmath reals) get 12 significant digits, Fractions
    render as p/q, tuples as comma-joined words, None stays None.
    """
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if hasattr(value, "item") and not isinstance(value, float):
        value = value.item()
        if isinstance(value, (bool, int)):
            return value
    number = float(value)
    if math.isnan(number):
        return "nan"
    return format(number, FLOAT_FORMAT)


class BaseFormatter(ABC):
    """
    Renders a ResultTable as header, one line per row, and footer.

    Subclasses set `extension`, which the runner uses when naming the
    files of secondary tables.
    """

    extension = "txt"

    def __init__(self, file: Optional[TextIO] = None):
        # Without a stream, format_table hands the text back to the caller
        self.file = file

    @abstractmethod
    def format_header(self, table: ResultTable) -> str:
        """Lines preceding the first row, or an empty string."""

    @abstractmethod
    def format_row(self, table: ResultTable, row: Tuple[Any, ...]) -> str:
        """One rendered row; cells go through render_value first."""

    @abstractmethod
    def format_footer(self, table: ResultTable) -> str:
        ...

    def format_table(self, table: ResultTable) -> Optional[str]:
        """
        Render the whole table with LF line endings.

        Empty parts are skipped. The text is written to `file` when one
        was given (returning None) and returned otherwise.
        """
        parts = [self.format_header(table)]
        parts.extend(self.format_row(table, row) for row in table.rows)
        parts.append(self.format_footer(table))
        text = "".join(f"{part}\n" for part in parts if part)

        if self.file is None:
            return text
        self.file.write(text)
        return None

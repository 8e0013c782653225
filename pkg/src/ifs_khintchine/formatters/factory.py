"""
Registry mapping artefact format names to table formatters.
"""

from typing import Dict, List, Optional, TextIO, Type

from .base import BaseFormatter
from .csv_formatter import CSVFormatter
from .json_formatter import JSONLinesFormatter
from .markdown import MarkdownFormatter

FORMATTERS: Dict[str, Type[BaseFormatter]] = {
    'csv': CSVFormatter,
    'jsonl': JSONLinesFormatter,
    'markdown': MarkdownFormatter,
}

# Alternative spellings accepted by --format and the `format` key
ALIASES = {
    'json-lines': 'jsonl',
    'md': 'markdown',
}


class UnknownFormatError(Exception):
    """No formatter is registered under the requested name."""


def resolve_format(format_name: str) -> str:
    """Canonical registry key for a format name or alias."""
    name = format_name.lower()
    return ALIASES.get(name, name)


def create_formatter(format_name: str, file: Optional[TextIO] = None, **kwargs) -> BaseFormatter:
    """
    Build the formatter that renders result tables as `format_name`.

    Args:
        format_name: Registered name or alias, matched case-insensitively
        file: Stream receiving the rendered table; without one the
              formatter returns text
        **kwargs: Forwarded to the formatter class

    Raises:
        UnknownFormatError: If nothing is registered under the name
    """
    key = resolve_format(format_name)
    if key not in FORMATTERS:
        known = ', '.join(get_available_formats())
        raise UnknownFormatError(f"Unknown format: {format_name}. Available formats: {known}")
    return FORMATTERS[key](file, **kwargs)


def _is_concrete_formatter(candidate: object) -> bool:
    return (
        isinstance(candidate, type)
        and issubclass(candidate, BaseFormatter)
        and candidate is not BaseFormatter
        and not getattr(candidate, "__abstractmethods__", None)
    )


def register_formatter(format_name: str, formatter_class: Type[BaseFormatter]) -> None:
    """
    Add or replace the formatter stored under `format_name`.

    Raises:
        TypeError: If formatter_class is not a concrete subclass of BaseFormatter.
    """
    if not _is_concrete_formatter(formatter_class):
        raise TypeError("Formatter must be a concrete subclass of BaseFormatter")
    FORMATTERS[format_name.lower()] = formatter_class


def get_available_formats() -> List[str]:
    """Registered format names followed by their aliases."""
    return [*FORMATTERS, *ALIASES]

"""
Tests for formatter factory.
"""

import io

import pytest

from ifs_khintchine.formatters import factory
from ifs_khintchine.formatters.base import BaseFormatter
from ifs_khintchine.formatters.csv_formatter import CSVFormatter
from ifs_khintchine.formatters.factory import (
    UnknownFormatError,
    create_formatter,
    get_available_formats,
    register_formatter,
    resolve_format,
)
from ifs_khintchine.formatters.json_formatter import JSONLinesFormatter
from ifs_khintchine.formatters.markdown import MarkdownFormatter


@pytest.fixture(autouse=True)
def registry(monkeypatch):
    """Keep registrations made by a test out of the shared registry."""
    monkeypatch.setattr(factory, "FORMATTERS", dict(factory.FORMATTERS))


class CustomFormatter(BaseFormatter):
    def format_header(self, table) -> str:
        return ""

    def format_row(self, table, row) -> str:
        return str(row)

    def format_footer(self, table) -> str:
        return ""


def test_create_csv_formatter():
    """Test creating a CSV formatter."""
    formatter = create_formatter('csv')
    assert isinstance(formatter, CSVFormatter)

    output_file = io.StringIO()
    formatter = create_formatter('csv', output_file, delimiter=';')
    assert formatter.file == output_file
    assert formatter.delimiter == ';'


def test_create_formatter_aliases_and_case():
    """Test format name aliases and case insensitivity."""
    assert isinstance(create_formatter('JSONL'), JSONLinesFormatter)
    assert isinstance(create_formatter('json-lines'), JSONLinesFormatter)
    assert isinstance(create_formatter('md'), MarkdownFormatter)
    assert isinstance(create_formatter('Markdown'), MarkdownFormatter)
    assert resolve_format('MD') == 'markdown'


def test_create_formatter_unknown_format():
    """Test handling of unknown format."""
    with pytest.raises(UnknownFormatError) as exc_info:
        create_formatter('unknown')

    error_msg = str(exc_info.value)
    assert "Unknown format: unknown" in error_msg
    assert "csv" in error_msg
    assert "jsonl" in error_msg


def test_register_custom_formatter():
    """Test registering a custom formatter."""
    register_formatter('Custom', CustomFormatter)

    assert 'custom' in get_available_formats()
    assert isinstance(create_formatter('custom'), CustomFormatter)


def test_register_formatter_overwrite():
    """Test overwriting an existing formatter registration."""
    register_formatter('markdown', CustomFormatter)

    formatter = create_formatter('markdown')
    assert isinstance(formatter, CustomFormatter)
    assert not isinstance(formatter, MarkdownFormatter)


def test_get_available_formats():
    """Test getting list of available formats."""
    formats = get_available_formats()

    assert {'csv', 'jsonl', 'markdown', 'md', 'json-lines'} <= set(formats)


def test_register_formatter_invalid():
    """Test registering invalid formatter classes."""
    class InvalidFormatter:
        pass

    class PartialFormatter(BaseFormatter):
        def format_header(self, table) -> str:
            return ""

    with pytest.raises(TypeError):
        register_formatter('invalid', InvalidFormatter)

    with pytest.raises(TypeError):
        register_formatter('invalid', BaseFormatter)

    with pytest.raises(TypeError):
        register_formatter('invalid', PartialFormatter)

    with pytest.raises(TypeError):
        register_formatter('invalid', CustomFormatter())

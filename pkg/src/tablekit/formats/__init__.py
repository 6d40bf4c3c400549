"""Parsing, serialization and conversion across the supported table formats.

parse() is strict: it raises ParseError (with location and reason) and only
pads ragged right edges, recording a warning.  convert() is the tolerant
route: it extracts the table portion from surrounding junk, repairs spans and
raggedness, and on unrecoverable input returns the sentinel empty table with
recovered=False instead of raising.
"""

from __future__ import annotations

from pathlib import Path

from ..core import InvalidTable, Table
from .common import (
    SENTINEL_HTML,
    ParseDiagnostics,
    ParseError,
    TableFormat,
    UnrepresentableInFormat,
    UnsupportedConstruct,
)
from .html import parse_html, serialize_html
from .latex import parse_latex, serialize_latex
from .markdown import parse_markdown, serialize_markdown

__all__ = [
    "TableFormat",
    "ParseDiagnostics",
    "ParseError",
    "UnsupportedConstruct",
    "UnrepresentableInFormat",
    "SENTINEL_HTML",
    "parse",
    "serialize",
    "convert",
    "detect_format",
]

_PARSERS = {
    TableFormat.HTML: parse_html,
    TableFormat.MARKDOWN: parse_markdown,
    TableFormat.LATEX: parse_latex,
}

_SERIALIZERS = {
    TableFormat.HTML: serialize_html,
    TableFormat.MARKDOWN: serialize_markdown,
    TableFormat.LATEX: serialize_latex,
}

_EXTENSIONS = {
    ".html": TableFormat.HTML,
    ".htm": TableFormat.HTML,
    ".md": TableFormat.MARKDOWN,
    ".markdown": TableFormat.MARKDOWN,
    ".tex": TableFormat.LATEX,
}


def detect_format(path: str | Path) -> TableFormat | None:
    return _EXTENSIONS.get(Path(path).suffix.lower())


def parse(src: str, fmt: TableFormat) -> tuple[Table, ParseDiagnostics]:
    """Strict parse of one table in the given format."""
    table, warnings = _PARSERS[fmt](src, tolerant=False)
    assert table is not None  # strict parsers raise instead of returning None
    return table, ParseDiagnostics(warnings=tuple(warnings))


def serialize(table: Table, fmt: TableFormat) -> str:
    """Deterministic canonical text for a valid table."""
    return _SERIALIZERS[fmt](table)


def convert(src: str, from_fmt: TableFormat) -> tuple[str, ParseDiagnostics]:
    """Tolerant conversion of possibly messy input into canonical HTML.

    Idempotent on its own output. Never raises on string input.
    """
    if not isinstance(src, str):
        return SENTINEL_HTML, ParseDiagnostics(("input is not text",), recovered=False)
    try:
        table, warnings = _PARSERS[from_fmt](src, tolerant=True)
    except (RecursionError, ValueError):
        table, warnings = None, ["tolerant parse failed"]
    if table is None:
        return SENTINEL_HTML, ParseDiagnostics(tuple(warnings) + ("no table recovered",), recovered=False)
    return serialize_html(table), ParseDiagnostics(tuple(warnings), recovered=True)

"""HTML table subset: table, caption, thead, tbody, tr, td, th with
colspan/rowspan. Everything else is stripped with a warning."""

from __future__ import annotations

from html.parser import HTMLParser

from ..core import Table, validate
from .common import (
    MAX_SPAN,
    ParseError,
    RawCell,
    RowBuffer,
    UnsupportedConstruct,
    assemble,
)

_STRUCTURAL = {"table", "caption", "thead", "tbody", "tfoot", "tr", "td", "th"}


class _TableHTMLParser(HTMLParser):
    def __init__(self, tolerant: bool):
        super().__init__(convert_charrefs=True)
        self.tolerant = tolerant
        self.buffer = RowBuffer()
        self.table_depth = 0
        self.finished_table = False
        self.in_caption = False
        self.caption_parts: list[str] = []
        self.current_row: list[RawCell] | None = None
        self.current_cell: RawCell | None = None
        self.cell_parts: list[str] = []

    def _loc(self) -> str:
        line, col = self.getpos()
        return f"line {line}, column {col + 1}"

    def _warn(self, message: str) -> None:
        self.buffer.warnings.append(f"{self._loc()}: {message}")

    def _span_attr(self, attrs, name: str) -> int:
        for key, value in attrs:
            if key == name:
                try:
                    span = int(str(value).strip())
                except (TypeError, ValueError):
                    if self.tolerant:
                        self._warn(f"unreadable {name} ignored")
                        return 1
                    raise ParseError(self._loc(), f"unreadable {name}={value!r}")
                if span < 1:
                    if self.tolerant:
                        return 1
                    raise ParseError(self._loc(), f"{name} must be >= 1, got {span}")
                return min(span, MAX_SPAN) if self.tolerant else span
        return 1

    def _close_cell(self) -> None:
        if self.current_cell is not None:
            text = "".join(self.cell_parts).strip()
            self.current_cell.content = text
            self.current_cell = None
            self.cell_parts = []

    def _close_row(self) -> None:
        self._close_cell()
        if self.current_row is not None:
            self.buffer.rows.append(self.current_row)
            self.current_row = None

    def handle_starttag(self, tag, attrs):
        tag = tag.lower()
        if tag == "table":
            if self.table_depth == 0 and not self.finished_table:
                self.table_depth = 1
            elif self.table_depth >= 1:
                if not self.tolerant:
                    raise UnsupportedConstruct(self._loc(), "nested table")
                self.table_depth += 1
                self._warn("nested table flattened")
            elif self.finished_table:
                if not self.tolerant:
                    raise ParseError(self._loc(), "more than one table")
                self._warn("extra table ignored")
            return
        if self.table_depth != 1 or self.finished_table:
            if self.table_depth == 0 and not self.finished_table and tag in ("tr", "td", "th"):
                # fragment without a <table> wrapper
                if not self.tolerant:
                    raise ParseError(self._loc(), f"<{tag}> outside a table")
                self.table_depth = 1
                self._warn("missing <table> wrapper assumed")
            else:
                return
        if tag in ("thead", "tbody", "tfoot"):
            return
        if tag == "caption":
            self.in_caption = True
            return
        if tag == "tr":
            self._close_row()
            self.current_row = []
            return
        if tag in ("td", "th"):
            if self.current_row is None:
                if not self.tolerant:
                    raise ParseError(self._loc(), f"<{tag}> outside a row")
                self.current_row = []
                self._warn("cell outside a row starts an implicit row")
            self._close_cell()
            self.current_cell = RawCell(
                content="",
                row_span=self._span_attr(attrs, "rowspan"),
                col_span=self._span_attr(attrs, "colspan"),
                is_header=(tag == "th"),
            )
            self.current_row.append(self.current_cell)
            return
        # anything else is outside the subset
        if tag == "br" and self.current_cell is not None:
            self.cell_parts.append("\n")
        self._warn(f"tag <{tag}> stripped")

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)

    def handle_endtag(self, tag):
        tag = tag.lower()
        if tag == "table":
            if self.table_depth > 1:
                self.table_depth -= 1
            elif self.table_depth == 1:
                self._close_row()
                self.table_depth = 0
                self.finished_table = True
            return
        if self.table_depth != 1:
            return
        if tag == "caption":
            self.in_caption = False
            return
        if tag == "tr":
            self._close_row()
        elif tag in ("td", "th"):
            self._close_cell()

    def handle_data(self, data):
        if self.in_caption:
            self.caption_parts.append(data)
        elif self.current_cell is not None:
            self.cell_parts.append(data)
        elif self.table_depth == 1 and data.strip():
            self._warn("stray text inside table ignored")


def parse_html(src: str, *, tolerant: bool = False) -> tuple[Table | None, list[str]]:
    parser = _TableHTMLParser(tolerant)
    try:
        parser.feed(src)
        parser.close()
    except ParseError:
        raise
    except Exception as exc:  # html.parser internals on hostile input
        if not tolerant:
            raise ParseError("input", f"unparseable HTML: {exc}")
        return None, parser.buffer.warnings + [f"unparseable HTML: {exc}"]
    if parser.table_depth > 0:
        if not tolerant:
            raise ParseError("input", "unclosed <table>")
        parser._close_row()
        parser.buffer.warnings.append("unclosed <table>")
    elif not parser.finished_table:
        if not tolerant:
            raise ParseError("input", "no <table> found")
        return None, parser.buffer.warnings
    caption = "".join(parser.caption_parts).strip()
    parser.buffer.caption = caption if caption else None
    table = assemble(parser.buffer, tolerant=tolerant, skip_occupied=True)
    return table, parser.buffer.warnings


def escape_html(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def serialize_html(table: Table) -> str:
    """Canonical single-line form: rowspan before colspan, spans only when > 1,
    minimal entity encoding."""
    verdict = validate(table)
    if not verdict:
        raise ValueError(f"cannot serialize invalid table: {verdict.problem}")
    parts = ["<table>"]
    if table.caption is not None:
        parts.append(f"<caption>{escape_html(table.caption)}</caption>")
    by_row: dict[int, list] = {}
    for a in table.anchors:
        by_row.setdefault(a.row, []).append(a)
    for r in range(1, table.n_rows + 1):
        parts.append("<tr>")
        for a in sorted(by_row.get(r, []), key=lambda x: x.col):
            tag = "th" if a.is_header else "td"
            attrs = ""
            if a.row_span > 1:
                attrs += f' rowspan="{a.row_span}"'
            if a.col_span > 1:
                attrs += f' colspan="{a.col_span}"'
            parts.append(f"<{tag}{attrs}>{escape_html(a.content)}</{tag}>")
        parts.append("</tr>")
    parts.append("</table>")
    return "".join(parts)

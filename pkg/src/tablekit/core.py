"""Canonical merged-cell-aware table model.

A table is a rectangular grid of n_rows x n_cols positions, 1-based.
Every grid position is covered by exactly one anchor cell; an anchor
occupies the rectangle [row, row + row_span) x [col, col + col_span).
Empty content is a real cell, not a missing one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator, NamedTuple


class InvalidTable(ValueError):
    """An operation required a valid table but validation failed."""


class CellRef(NamedTuple):
    row_id: int
    col_id: int


@dataclass(frozen=True)
class AnchorCell:
    """Top-left cell of a (possibly merged) region."""

    row: int
    col: int
    row_span: int = 1
    col_span: int = 1
    content: str = ""
    is_header: bool = False

    def bottom_right(self) -> CellRef:
        return CellRef(self.row + self.row_span - 1, self.col + self.col_span - 1)


@dataclass(frozen=True)
class Table:
    n_rows: int
    n_cols: int
    anchors: tuple[AnchorCell, ...]
    caption: str | None = None
    source_id: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.anchors, tuple):
            object.__setattr__(self, "anchors", tuple(self.anchors))

    def has_spans(self) -> bool:
        return any(a.row_span > 1 or a.col_span > 1 for a in self.anchors)


@dataclass(frozen=True)
class ValidationVerdict:
    ok: bool
    problem: str | None = None
    position: CellRef | None = None

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Grid:
    """Expanded view: one entry per grid position, resolving to its anchor."""

    n_rows: int
    n_cols: int
    cells: tuple[tuple[AnchorCell, ...], ...]

    def anchor_at(self, row: int, col: int) -> AnchorCell:
        if not (1 <= row <= self.n_rows and 1 <= col <= self.n_cols):
            raise IndexError(f"position ({row},{col}) outside {self.n_rows}x{self.n_cols} grid")
        return self.cells[row - 1][col - 1]

    def content_at(self, row: int, col: int) -> str:
        return self.anchor_at(row, col).content

    def row(self, row: int) -> tuple[AnchorCell, ...]:
        return self.cells[row - 1]

    def column(self, col: int) -> tuple[AnchorCell, ...]:
        return tuple(r[col - 1] for r in self.cells)


def validate(table: Table) -> ValidationVerdict:
    """Check the tiling invariants; report the first violation found.

    Anchors are placed in their given order, so the first overlapping
    grid position and the first uncovered position are deterministic.
    """
    if table.n_rows < 1:
        return ValidationVerdict(False, f"n_rows must be >= 1, got {table.n_rows}")
    if table.n_cols < 1:
        return ValidationVerdict(False, f"n_cols must be >= 1, got {table.n_cols}")
    covered: list[list[bool]] = [[False] * table.n_cols for _ in range(table.n_rows)]
    for a in table.anchors:
        pos = CellRef(a.row, a.col)
        if a.row_span < 1 or a.col_span < 1:
            return ValidationVerdict(False, f"span must be >= 1 at ({a.row},{a.col})", pos)
        if a.row < 1 or a.col < 1:
            return ValidationVerdict(False, f"anchor outside grid at ({a.row},{a.col})", pos)
        br = a.bottom_right()
        if br.row_id > table.n_rows or br.col_id > table.n_cols:
            return ValidationVerdict(False, f"span exceeds grid bounds at ({a.row},{a.col})", pos)
        for r in range(a.row, br.row_id + 1):
            for c in range(a.col, br.col_id + 1):
                if covered[r - 1][c - 1]:
                    return ValidationVerdict(False, f"overlap at ({r},{c})", CellRef(r, c))
                covered[r - 1][c - 1] = True
    for r in range(1, table.n_rows + 1):
        for c in range(1, table.n_cols + 1):
            if not covered[r - 1][c - 1]:
                return ValidationVerdict(False, f"gap at ({r},{c})", CellRef(r, c))
    return ValidationVerdict(True)


def expand_grid(table: Table) -> Grid:
    """Expand anchors into the full positional matrix.

    Raises InvalidTable when the table does not validate.
    """
    verdict = validate(table)
    if not verdict:
        raise InvalidTable(verdict.problem)
    matrix: list[list[AnchorCell | None]] = [[None] * table.n_cols for _ in range(table.n_rows)]
    for a in table.anchors:
        for r in range(a.row, a.row + a.row_span):
            for c in range(a.col, a.col + a.col_span):
                matrix[r - 1][c - 1] = a
    return Grid(table.n_rows, table.n_cols, tuple(tuple(row) for row in matrix))  # type: ignore[arg-type]


def merged_regions(table: Table) -> list[tuple[CellRef, CellRef]]:
    """(top_left, bottom_right) for every anchor spanning more than one position.

    Ordered row-major by top-left corner. Empty for span-free tables.
    """
    regions = [
        (CellRef(a.row, a.col), a.bottom_right())
        for a in table.anchors
        if a.row_span > 1 or a.col_span > 1
    ]
    regions.sort(key=lambda pair: pair[0])
    return regions


def iter_anchors_row_major(table: Table) -> Iterator[AnchorCell]:
    yield from sorted(table.anchors, key=lambda a: (a.row, a.col))


def table_to_dict(table: Table) -> dict[str, Any]:
    out: dict[str, Any] = {
        "n_rows": table.n_rows,
        "n_cols": table.n_cols,
        "caption": table.caption,
        "anchors": [
            {
                "row": a.row,
                "col": a.col,
                "row_span": a.row_span,
                "col_span": a.col_span,
                "content": a.content,
                "is_header": a.is_header,
            }
            for a in table.anchors
        ],
    }
    if table.source_id is not None:
        out["source_id"] = table.source_id
    return out


def table_from_dict(data: dict[str, Any]) -> Table:
    try:
        anchors = tuple(
            AnchorCell(
                row=int(a["row"]),
                col=int(a["col"]),
                row_span=int(a.get("row_span", 1)),
                col_span=int(a.get("col_span", 1)),
                content=str(a.get("content", "")),
                is_header=bool(a.get("is_header", False)),
            )
            for a in data["anchors"]
        )
        return Table(
            n_rows=int(data["n_rows"]),
            n_cols=int(data["n_cols"]),
            anchors=anchors,
            caption=data.get("caption"),
            source_id=data.get("source_id"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidTable(f"malformed table object: {exc}") from exc


def table_to_json(table: Table) -> str:
    return json.dumps(table_to_dict(table), ensure_ascii=False)


def table_from_json(text: str) -> Table:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidTable(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidTable("table JSON must be an object")
    return table_from_dict(data)

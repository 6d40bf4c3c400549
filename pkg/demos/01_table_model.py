"""The canonical table model: anchors, spans, validation, dict interchange.

Run: python3 demos/01_table_model.py
"""

from __future__ import annotations

import json

from tablekit import AnchorCell, Table, table_from_dict, table_to_dict, validate

# A table is a grid of n_rows x n_cols positions tiled by anchor cells.
# Each anchor sits at a 1-based (row, col) and may span further positions.
quarterly = Table(
    n_rows=3,
    n_cols=3,
    anchors=(
        AnchorCell(1, 1, content="region", is_header=True),
        AnchorCell(1, 2, col_span=2, content="sales", is_header=True),
        AnchorCell(2, 1, row_span=2, content="north"),
        AnchorCell(2, 2, content="q1"),
        AnchorCell(2, 3, content="118"),
        AnchorCell(3, 2, content="q2"),
        AnchorCell(3, 3, content="240"),
    ),
    caption="northern sales by quarter",
)

verdict = validate(quarterly)
print(f"valid: {verdict.ok}")
print(f"has merged cells: {quarterly.has_spans()}")

# Tables round-trip losslessly through plain dicts (and therefore JSON).
data = table_to_dict(quarterly)
print("\nas JSON:")
print(json.dumps(data, indent=2))
assert table_from_dict(data) == quarterly

# Validation pinpoints the first structural problem it finds.
overlapping = Table(
    n_rows=2,
    n_cols=2,
    anchors=(
        AnchorCell(1, 1, col_span=2, content="a"),
        AnchorCell(1, 2, content="b"),
        AnchorCell(2, 1, content="c"),
        AnchorCell(2, 2, content="d"),
    ),
)
bad = validate(overlapping)
print(f"\noverlapping spans rejected: ok={bad.ok} problem={bad.problem!r} at {bad.position}")

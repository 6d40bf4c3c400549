"""Textual table formats: strict parsing, serialization, tolerant conversion.

Run: python3 demos/02_formats.py
"""

from __future__ import annotations

from tablekit import TableFormat, UnrepresentableInFormat, convert, parse, serialize

markdown_src = """\
| city | population |
| --- | --- |
| Oslo | 709,037 |
| Bergen | 291,940 |
"""

# parse() is strict: it returns the canonical table plus diagnostics.
table, diag = parse(markdown_src, TableFormat.MARKDOWN)
print(f"parsed {table.n_rows}x{table.n_cols} table, recovered={diag.recovered}")

# serialize() emits canonical text; every format round-trips its own output.
for fmt in TableFormat:
    try:
        text = serialize(table, fmt)
    except UnrepresentableInFormat as exc:
        print(f"\n-- {fmt.value}: {exc}")
        continue
    print(f"\n-- {fmt.value} --\n{text}")
    back, _ = parse(text, fmt)
    assert (back.n_rows, back.n_cols) == (table.n_rows, table.n_cols)

# Pipe tables cannot express merged cells.
spanned, _ = parse(
    '<table><tr><td colspan="2">total</td></tr><tr><td>1</td><td>2</td></tr></table>',
    TableFormat.HTML,
)
try:
    serialize(spanned, TableFormat.MARKDOWN)
except UnrepresentableInFormat as exc:
    print(f"markdown refuses merged cells: {exc}")

# convert() is the tolerant path used when scoring model output: anything
# that fails to parse becomes the sentinel empty table instead of an error.
html, conv = convert("no table here at all", TableFormat.MARKDOWN)
print(f"\njunk converts to sentinel: {html!r} (recovered={conv.recovered})")

"""Tree edit distance similarity between HTML tables.

Run: python3 demos/06_tree_similarity.py
"""

from __future__ import annotations

from tablekit.metrics.teds import html_to_tree, teds, tree_edit_distance, tree_size

gold = (
    "<table>"
    "<tr><td>name</td><td>score</td></tr>"
    "<tr><td>ada</td><td>91</td></tr>"
    "</table>"
)

candidates = {
    "identical": gold,
    "one cell renamed": gold.replace("91", "19"),
    "row missing": "<table><tr><td>name</td><td>score</td></tr></table>",
    "spans disagree": (
        '<table><tr><td colspan="2">name</td></tr>'
        "<tr><td>ada</td><td>91</td></tr></table>"
    ),
    "not a table at all": "sorry, I cannot help with that",
}

# Similarity is 1 - distance / max(tree sizes); the tree includes the
# table root, rows, and cells, with cell content compared by edit distance.
gold_tree = html_to_tree(gold)
print(f"gold tree size: {tree_size(gold_tree)} nodes\n")
for label, html in candidates.items():
    cand_tree = html_to_tree(html)
    dist = tree_edit_distance(gold_tree, cand_tree)
    score = teds(html, gold)
    print(f"{label:<20} distance={dist:>5.2f}  similarity={score:.4f}")

# The measure is symmetric and tolerant of sloppy markup.
sloppy = "<tr><td>name<td>score<tr><td>ada<td>91"
print(f"\nsloppy fragment vs gold: {teds(sloppy, gold):.4f} (wrappers and closers inferred)")

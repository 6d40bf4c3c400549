"""Scoring predictions against a gold file, including partial credit.

Run: python3 demos/05_evaluate.py
Expects demo_output/dataset/ from 04_synthesize.py (runs it if missing).
"""

from __future__ import annotations

import json
import runpy
from pathlib import Path

from tablekit.metrics.evaluate import evaluate

base = Path(__file__).parent / "demo_output"
gold_path = base / "dataset" / "samples.jsonl"
if not gold_path.exists():
    runpy.run_path(str(Path(__file__).parent / "04_synthesize.py"))

records = [json.loads(l) for l in gold_path.read_text().split("\n") if l.strip()]

# Replay half the gold responses verbatim and sabotage the rest, so the
# report shows both perfect and partial scores.
lines = []
for i, record in enumerate(records):
    if "turns" in record and record["turns"] is not None:
        responses = [t["gold_response"] for t in record["turns"]]
        lines.append(json.dumps({"sample_id": record["sample_id"], "responses": responses}))
        continue
    response = record["gold_response"] if i % 2 == 0 else "the table has 99 rows"
    lines.append(json.dumps({"sample_id": record["sample_id"], "response": response}))

pred_path = base / "predictions.jsonl"
pred_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

report = evaluate(pred_path, gold_path)
print("\n".join(report.summary_lines()))

print("\nper-sample detail for the first two scored samples:")
for row in report.per_sample[:2]:
    print(json.dumps(row, indent=2))

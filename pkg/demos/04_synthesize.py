"""End-to-end dataset synthesis: corpus in, images + samples + manifest out.

Run: python3 demos/04_synthesize.py
Writes demo_output/dataset/ next to this script.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from tablekit.pipeline import PipelineConfig, cmd_synth

base = Path(__file__).parent / "demo_output"
corpus = base / "corpus"
corpus.mkdir(parents=True, exist_ok=True)

# A tiny corpus of JSON tables; HTML, Markdown, and LaTeX files work too.
rng = random.Random(4)
for i in range(20):
    rows, cols = rng.randint(2, 4), rng.randint(2, 4)
    anchors = [
        {"row": r, "col": c, "content": f"r{r}c{c}", "is_header": r == 1}
        for r in range(1, rows + 1)
        for c in range(1, cols + 1)
    ]
    data = {"n_rows": rows, "n_cols": cols, "caption": None, "anchors": anchors}
    (corpus / f"table{i:02d}.json").write_text(json.dumps(data), encoding="utf-8")

config_path = base / "config.json"
config_path.write_text(
    json.dumps(
        {
            "corpus_dir": "corpus",
            "master_seed": 11,
            "counts": {
                "tsd": [12, 2],
                "tce": [12, 2],
                "tr": [12, 2],
            },
            "multiturn_fraction": 0.5,
        },
        indent=2,
    ),
    encoding="utf-8",
)

out = base / "dataset"
manifest = cmd_synth(PipelineConfig.from_file(config_path), out)

print(f"corpus tables: {manifest['corpus']['tables']}")
print(f"instance counts: {manifest['counts']}")
print(f"conversations: {manifest['conversations']}")
print(f"files written: {len(manifest['files'])} (samples.jsonl + images)")

first = json.loads((out / "samples.jsonl").read_text().split("\n")[0])
print("\nfirst sample record:")
print(json.dumps(first, indent=2)[:800])
print("...")

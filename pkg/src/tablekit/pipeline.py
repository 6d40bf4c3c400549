"""Dataset construction end to end: corpus directory in, benchmark out.

The synth driver loads a corpus of table files, synthesizes instruction
samples, renders one SVG per referenced table, and writes samples.jsonl,
images/, and a manifest with a sha256 digest of every emitted file. All
outputs are pure functions of (config, seed), so two runs agree byte for
byte regardless of worker count; the manifest carries no timestamps.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .core import Table, table_from_dict, table_to_dict, validate
from .formats import detect_format, parse, serialize
from .formats.common import ParseError, TableFormat, UnrepresentableInFormat
from .metrics.evaluate import MetricReport, evaluate
from .render import (
    DEFAULT_STYLE_MIX,
    CommandRasterizer,
    StyleFamily,
    StyleMix,
    load_style_ranges,
    rasterize,
    render_svg,
    sample_style,
)
from .taskdefs import TaskKind
from .tasks import SynthConfig, SynthResult, style_seed, synthesize
from .templates import default_pool, load_pool


class PipelineConfigError(ValueError):
    """The pipeline config file is missing, malformed, or inconsistent."""


_CONFIG_KEYS = {
    "corpus_dir",
    "master_seed",
    "counts",
    "tce_cells_per_sample",
    "tcl_cells_per_sample",
    "tr_format_weights",
    "multiturn_fraction",
    "style_mix",
    "style_ranges_path",
    "template_pool_path",
    "qa_pairs_path",
    "rasterizer_command",
    "raster_dpi",
}


@dataclass
class PipelineConfig:
    """Everything cmd_synth needs, loaded from one JSON file.

    Relative paths are resolved against the config file's directory.
    """

    corpus_dir: str
    master_seed: int = 0
    counts: dict[str, tuple[int, int]] | None = None
    tce_cells_per_sample: int = 3
    tcl_cells_per_sample: int = 3
    tr_format_weights: dict[str, float] | None = None
    multiturn_fraction: float = 0.0
    style_mix: dict[str, float] | None = None
    style_ranges_path: str | None = None
    template_pool_path: str | None = None
    qa_pairs_path: str | None = None
    rasterizer_command: str | None = None
    raster_dpi: int = 96
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise PipelineConfigError(f"cannot read config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise PipelineConfigError(f"config {path} is not valid JSON: {exc}")
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: object, base_dir: str | Path = ".") -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise PipelineConfigError("config must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise PipelineConfigError(f"unknown config keys: {sorted(unknown)}")
        if "corpus_dir" not in raw:
            raise PipelineConfigError("config lacks corpus_dir")
        counts = None
        if raw.get("counts") is not None:
            counts = {}
            for name, pair in raw["counts"].items():
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise PipelineConfigError(f"counts[{name!r}] must be [train, eval]")
                counts[str(name)] = (int(pair[0]), int(pair[1]))
        config = cls(
            corpus_dir=str(raw["corpus_dir"]),
            master_seed=int(raw.get("master_seed", 0)),
            counts=counts,
            tce_cells_per_sample=int(raw.get("tce_cells_per_sample", 3)),
            tcl_cells_per_sample=int(raw.get("tcl_cells_per_sample", 3)),
            tr_format_weights=raw.get("tr_format_weights"),
            multiturn_fraction=float(raw.get("multiturn_fraction", 0.0)),
            style_mix=raw.get("style_mix"),
            style_ranges_path=raw.get("style_ranges_path"),
            template_pool_path=raw.get("template_pool_path"),
            qa_pairs_path=raw.get("qa_pairs_path"),
            rasterizer_command=raw.get("rasterizer_command"),
            raster_dpi=int(raw.get("raster_dpi", 96)),
            base_dir=Path(base_dir),
        )
        config.to_synth_config()  # surface count/weight problems at load time
        config.resolve_style_mix()
        return config

    def _resolve(self, value: str) -> Path:
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def echo(self) -> dict:
        """The config as fed in, for the manifest."""
        out: dict = {"corpus_dir": self.corpus_dir, "master_seed": self.master_seed}
        if self.counts is not None:
            out["counts"] = {k: list(v) for k, v in sorted(self.counts.items())}
        out["tce_cells_per_sample"] = self.tce_cells_per_sample
        out["tcl_cells_per_sample"] = self.tcl_cells_per_sample
        for key in (
            "tr_format_weights",
            "style_mix",
            "style_ranges_path",
            "template_pool_path",
            "qa_pairs_path",
            "rasterizer_command",
        ):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        out["multiturn_fraction"] = self.multiturn_fraction
        out["raster_dpi"] = self.raster_dpi
        return out

    def to_synth_config(self, seed_override: int | None = None) -> SynthConfig:
        kwargs: dict = {
            "tce_cells_per_sample": self.tce_cells_per_sample,
            "tcl_cells_per_sample": self.tcl_cells_per_sample,
            "multiturn_fraction": self.multiturn_fraction,
            "master_seed": self.master_seed if seed_override is None else seed_override,
        }
        try:
            if self.counts is not None:
                kwargs["counts"] = {TaskKind(name): pair for name, pair in self.counts.items()}
            if self.tr_format_weights is not None:
                kwargs["tr_format_weights"] = {
                    TableFormat(name): float(w) for name, w in self.tr_format_weights.items()
                }
            return SynthConfig(**kwargs)
        except ValueError as exc:
            raise PipelineConfigError(str(exc))

    def resolve_style_mix(self) -> StyleMix:
        if self.style_mix is None:
            return DEFAULT_STYLE_MIX
        try:
            return StyleMix({StyleFamily(name): float(w) for name, w in self.style_mix.items()})
        except ValueError as exc:
            raise PipelineConfigError(f"bad style_mix: {exc}")

    def resolve_style_ranges(self) -> dict | None:
        if self.style_ranges_path is None:
            return None
        try:
            return load_style_ranges(self._resolve(self.style_ranges_path))
        except (OSError, ValueError) as exc:
            raise PipelineConfigError(f"bad style ranges file: {exc}")

    def resolve_pool(self):
        if self.template_pool_path is None:
            return default_pool()
        try:
            return load_pool(self._resolve(self.template_pool_path))
        except (OSError, ValueError) as exc:
            raise PipelineConfigError(f"bad template pool: {exc}")

    def resolve_qa_pairs(self) -> list[dict]:
        if self.qa_pairs_path is None:
            return []
        path = self._resolve(self.qa_pairs_path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise PipelineConfigError(f"bad qa pairs file {path}: {exc}")
        if not isinstance(raw, list) or not all(isinstance(p, dict) for p in raw):
            raise PipelineConfigError(f"{path} must hold a JSON list of objects")
        return raw


# ---------------------------------------------------------------------------
# corpus ingestion
# ---------------------------------------------------------------------------


@dataclass
class CorpusLoad:
    tables: list[Table]
    skipped: list[tuple[str, str]]  # (path, reason)

    @property
    def skipped_count(self) -> int:
        return len(self.skipped)


_CORPUS_SUFFIXES = (".json", ".html", ".htm", ".md", ".markdown", ".tex")


def _load_table_file(path: Path) -> Table:
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        table = table_from_dict(json.loads(text))
    else:
        fmt = detect_format(path)
        if fmt is None:
            raise ParseError(f"unsupported extension {path.suffix!r}")
        table, _diag = parse(text, fmt)
    verdict = validate(table)
    if not verdict.ok:
        raise ParseError(f"invalid table: {verdict.problem}")
    return table


def load_corpus(corpus_dir: str | Path) -> CorpusLoad:
    """Reads every recognized table file under the directory, recursively.

    Files are visited in sorted path order; table ids come from file stems
    (deduplicated with a numeric suffix); malformed files are skipped and
    reported, never fatal.
    """
    root = Path(corpus_dir)
    if not root.is_dir():
        raise PipelineConfigError(f"corpus directory not found: {root}")
    tables: list[Table] = []
    skipped: list[tuple[str, str]] = []
    seen_ids: dict[str, int] = {}
    paths = sorted(p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in _CORPUS_SUFFIXES)
    for path in paths:
        try:
            table = _load_table_file(path)
        except Exception as exc:  # malformed corpus entries must never abort the run
            skipped.append((str(path), str(exc)))
            continue
        stem = path.stem
        n = seen_ids.get(stem, 0) + 1
        seen_ids[stem] = n
        table_id = stem if n == 1 else f"{stem}-{n}"
        tables.append(dataclasses.replace(table, source_id=table_id))
    return CorpusLoad(tables=tables, skipped=skipped)


# ---------------------------------------------------------------------------
# rendering (worker-safe pure function)
# ---------------------------------------------------------------------------


def _render_table_svg(job: tuple[dict, int, dict, dict | None]) -> tuple[str, str]:
    """(table dict, style seed, mix weights by name, ranges) -> (id, svg)."""
    table_dict, seed, weights, ranges = job
    table = table_from_dict(table_dict)
    mix = StyleMix({StyleFamily(name): w for name, w in weights.items()})
    spec = sample_style(mix, seed, ranges)
    return table_dict["source_id"], render_svg(table, spec)


def _render_all(
    jobs: Sequence[tuple[dict, int, dict, dict | None]], workers: int
) -> list[tuple[str, str]]:
    if workers <= 1 or len(jobs) < 2:
        return [_render_table_svg(job) for job in jobs]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves input order, so the write order (and every digest)
        # is independent of scheduling
        return list(pool.map(_render_table_svg, jobs, chunksize=8))


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def _sniff_format_name(table_text: str) -> str:
    head = table_text.lstrip()
    if head.startswith("<"):
        return "html"
    if "\\begin{tabular}" in table_text:
        return "latex"
    return "markdown"


def _record_task_counts(records: Sequence[dict]) -> dict[str, int]:
    counts: dict[str, int] = {}

    def bump(task: str, split: str) -> None:
        key = f"{task}-{split}"
        counts[key] = counts.get(key, 0) + 1

    for record in records:
        split = record.get("meta", {}).get("split", "train")
        turns = record.get("turns")
        if turns:
            for turn in turns:
                bump(turn["task"], split)
        else:
            bump(record["task"], split)
    return dict(sorted(counts.items()))


def _tr_format_mix(records: Sequence[dict]) -> dict[str, float]:
    names: list[str] = []
    for record in records:
        turns = record.get("turns")
        if turns:
            for turn in turns:
                if turn["task"] == TaskKind.TR.value:
                    names.append(_sniff_format_name(str(turn["gold_answer"].get("answer", ""))))
        elif record["task"] == TaskKind.TR.value:
            fmt = record.get("meta", {}).get("tr_format")
            names.append(fmt or _sniff_format_name(str(record["gold_answer"].get("answer", ""))))
    if not names:
        return {}
    return {
        name: names.count(name) / len(names) for name in sorted(set(names))
    }


def _style_mix_achieved(records: Sequence[dict]) -> dict[str, float]:
    by_table: dict[str, str] = {}
    for record in records:
        family = record.get("meta", {}).get("style_family")
        if family:
            by_table.setdefault(record["table_id"], family)
    if not by_table:
        return {}
    families = list(by_table.values())
    return {
        name: families.count(name) / len(families) for name in sorted(set(families))
    }


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def cmd_synth(
    config: PipelineConfig,
    out_dir: str | Path,
    *,
    seed: int | None = None,
    workers: int = 1,
) -> dict:
    """Builds the dataset under out_dir and returns the manifest dict."""
    corpus = load_corpus(config._resolve(config.corpus_dir))
    synth_config = config.to_synth_config(seed_override=seed)
    style_mix = config.resolve_style_mix()
    style_ranges = config.resolve_style_ranges()
    pool = config.resolve_pool()
    qa_pairs = config.resolve_qa_pairs()

    result: SynthResult = synthesize(
        corpus.tables,
        synth_config,
        pool=pool,
        qa_pairs=qa_pairs,
        style_mix=style_mix,
        style_ranges=style_ranges,
    )
    records = [s.to_dict() for s in result.samples]

    referenced = sorted({r["table_id"] for r in records})
    by_id = {t.source_id: t for t in corpus.tables}
    weights = {family.value: w for family, w in style_mix.weights.items()}
    jobs = [
        (
            table_to_dict(by_id[tid]),
            style_seed(synth_config.master_seed, tid),
            weights,
            style_ranges,
        )
        for tid in referenced
    ]
    rendered = _render_all(jobs, workers)

    out = Path(out_dir)
    images_dir = out / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    digests: dict[str, str] = {}
    samples_bytes = (
        "\n".join(json.dumps(r, ensure_ascii=False) for r in records) + "\n"
        if records
        else ""
    ).encode("utf-8")
    (out / "samples.jsonl").write_bytes(samples_bytes)
    digests["samples.jsonl"] = _sha256(samples_bytes)
    for table_id, svg in rendered:
        data = svg.encode("utf-8")
        (images_dir / f"{table_id}.svg").write_bytes(data)
        digests[f"images/{table_id}.svg"] = _sha256(data)

    manifest = {
        "version": __version__,
        "config": config.echo(),
        "master_seed": synth_config.master_seed,
        "corpus": {"tables": len(corpus.tables), "skipped_files": corpus.skipped_count},
        "counts": _record_task_counts(records),
        "conversations": result.conversations,
        "consumed_singles": result.consumed_singles,
        "shortfalls": dict(sorted(result.shortfalls.items())),
        "qa_pairs_skipped": result.qa_pairs_skipped,
        "style_mix_achieved": _style_mix_achieved(records),
        "tr_format_mix_achieved": _tr_format_mix(records),
        "files": dict(sorted(digests.items())),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return manifest


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(
    predictions_path: str | Path,
    gold_path: str | Path,
    out_path: str | Path | None = None,
) -> MetricReport:
    report = evaluate(predictions_path, gold_path)
    if out_path is not None:
        Path(out_path).write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return report


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def _iter_requests_responses(record: dict):
    turns = record.get("turns")
    if turns:
        for turn in turns:
            yield str(turn.get("request", "")), str(turn.get("gold_response", ""))
    else:
        yield str(record.get("request", "")), str(record.get("gold_response", ""))


def dataset_stats(samples_path: str | Path) -> dict:
    """Summary of a samples.jsonl file, from the records alone."""
    records: list[dict] = []
    try:
        text = Path(samples_path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PipelineConfigError(f"cannot read {samples_path}: {exc}")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PipelineConfigError(f"{samples_path}:{lineno}: not valid JSON: {exc}")
        if not isinstance(obj, dict):
            raise PipelineConfigError(f"{samples_path}:{lineno}: expected an object")
        records.append(obj)

    request_lengths: list[int] = []
    response_lengths: list[int] = []
    rows: list[int] = []
    cols: list[int] = []
    conversations = 0
    for record in records:
        if record.get("turns"):
            conversations += 1
        for request, response in _iter_requests_responses(record):
            request_lengths.append(len(request.split()))
            response_lengths.append(len(response.split()))
        meta = record.get("meta", {})
        if "n_rows" in meta and "n_cols" in meta:
            rows.append(int(meta["n_rows"]))
            cols.append(int(meta["n_cols"]))

    def _avg(values: Sequence[int]) -> float:
        return sum(values) / len(values) if values else 0.0

    def _dist(values: Sequence[int]) -> dict:
        if not values:
            return {"min": 0, "max": 0, "mean": 0.0}
        return {"min": min(values), "max": max(values), "mean": _avg(values)}

    return {
        "samples": len(records),
        "conversations": conversations,
        "per_task": _record_task_counts(records),
        "request_tokens_avg": _avg(request_lengths),
        "response_tokens_avg": _avg(response_lengths),
        "style_mix": _style_mix_achieved(records),
        "tr_format_mix": _tr_format_mix(records),
        "table_rows": _dist(rows),
        "table_cols": _dist(cols),
    }


# ---------------------------------------------------------------------------
# render / convert (single-file helpers behind the CLI)
# ---------------------------------------------------------------------------


def cmd_render(
    input_path: str | Path,
    out_path: str | Path,
    *,
    seed: int = 0,
    image_format: str = "svg",
    dpi: int = 96,
    config: PipelineConfig | None = None,
) -> Path:
    """Renders one table file to SVG (or PNG via the configured rasterizer)."""
    table = _load_table_file(Path(input_path))
    mix = config.resolve_style_mix() if config is not None else DEFAULT_STYLE_MIX
    ranges = config.resolve_style_ranges() if config is not None else None
    spec = sample_style(mix, seed, ranges)
    svg = render_svg(table, spec)
    out = Path(out_path)
    if image_format == "svg":
        out.write_text(svg, encoding="utf-8")
        return out
    if image_format != "png":
        raise PipelineConfigError(f"unsupported image format {image_format!r}")
    command = config.rasterizer_command if config is not None else None
    backend = CommandRasterizer(command) if command else None
    out.write_bytes(rasterize(svg, dpi=dpi, backend=backend))
    return out


def cmd_convert(
    input_path: str | Path,
    target: TableFormat,
    out_path: str | Path | None = None,
) -> str:
    """Strictly parses one table file and serializes it in the target format."""
    table = _load_table_file(Path(input_path))
    text = serialize(table, target)
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text

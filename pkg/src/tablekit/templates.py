"""Instruction template pools and request construction.

A pool holds, per task, a list of instruction templates and a list of
format hints (short descriptions of the required JSON answer shape).
Requests are built by drawing one of each uniformly under a seed and
substituting the task inputs into the template placeholders.
"""

from __future__ import annotations

import json
import random
import re
import subprocess
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .taskdefs import OPTIONAL_PLACEHOLDERS, REQUIRED_PLACEHOLDERS, TaskKind, allowed_placeholders


class PoolFormatError(ValueError):
    """The pool file does not have the expected shape."""


class PoolExpansionError(RuntimeError):
    """The external expansion command failed to produce usable output."""


class DuplicateId(PoolFormatError):
    """Two entries of the same kind share an id."""


class MissingMandatoryDefault(PoolFormatError):
    """A built-in task has no template or no hint in the pool."""


class MissingPlaceholder(KeyError):
    """A template references a placeholder absent from the task input."""


_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")


@dataclass(frozen=True)
class Template:
    id: str
    task: TaskKind
    body: str

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER.findall(self.body))


@dataclass(frozen=True)
class FormatHint:
    id: str
    task: TaskKind
    body: str


# last-resort wording used when a programmatically built pool is empty for a task
_FALLBACK_TEMPLATES: dict[TaskKind, str] = {
    TaskKind.TSD: "Inspect the table in the image and report how many rows and how many columns it contains.",
    TaskKind.TCE: "Read the table in the image and extract the contents of these cells: {cells}.",
    TaskKind.TCL: "Find where the following values are located in the pictured table: {cells}.",
    TaskKind.MCD: "Decide whether the table in the image contains merged cells, and if it does, identify every merged region.",
    TaskKind.RCE: "Transcribe every cell of {cells} from the table shown in the image.",
    TaskKind.TR: "Write out the complete structure and contents of the pictured table as {format_name}.",
    TaskKind.QA_WRAP: "Use the table in the image to answer the question below.\n{question}",
}

_FALLBACK_HINTS: dict[TaskKind, str] = {
    TaskKind.TSD: 'Reply with a JSON object of the form {"row_number": <int>, "column_number": <int>} and nothing else.',
    TaskKind.TCE: 'Reply with JSON shaped like {"cells": [{"position": [<row>, <column>], "value": "<cell text>"}]}, one entry per requested cell, in the order asked.',
    TaskKind.TCL: 'Reply with JSON shaped like {"cells": [{"value": "<cell text>", "position": [<row>, <column>]}]}, one entry per requested value, in the order asked.',
    TaskKind.MCD: 'Reply with JSON of the form {"has_merged": <true|false>, "regions": [[[<top row>, <left column>], [<bottom row>, <right column>]], ...]}; use an empty list when nothing is merged.',
    TaskKind.RCE: 'Reply with JSON of the form {"axis": "<row|column>", "lines": {"<index>": ["<cell text>", ...]}} covering each requested line in full.',
    TaskKind.TR: 'Reply with JSON of the form {"answer": "<the whole table transcribed in the requested format>"}.',
    TaskKind.QA_WRAP: 'Reply with JSON of the form {"answer": <your final answer>} and no other text.',
}


@dataclass(frozen=True)
class TemplatePool:
    templates: dict[TaskKind, tuple[Template, ...]] = field(default_factory=dict)
    hints: dict[TaskKind, tuple[FormatHint, ...]] = field(default_factory=dict)

    def templates_for(self, task: TaskKind) -> tuple[Template, ...]:
        entries = self.templates.get(task, ())
        if not entries:
            return (Template(f"fallback-{task.value}", task, _FALLBACK_TEMPLATES[task]),)
        return entries

    def hints_for(self, task: TaskKind) -> tuple[FormatHint, ...]:
        entries = self.hints.get(task, ())
        if not entries:
            return (FormatHint(f"fallback-hint-{task.value}", task, _FALLBACK_HINTS[task]),)
        return entries


def _validate_template(entry: Template) -> None:
    allowed = allowed_placeholders(entry.task)
    used = entry.placeholders()
    unknown = used - allowed
    if unknown:
        raise PoolFormatError(
            f"template {entry.id!r} uses placeholders {sorted(unknown)} not defined for task {entry.task.value}"
        )
    missing = REQUIRED_PLACEHOLDERS[entry.task] - used
    if missing:
        raise PoolFormatError(
            f"template {entry.id!r} is missing required placeholders {sorted(missing)} for task {entry.task.value}"
        )


def _build_pool(data: dict) -> TemplatePool:
    if not isinstance(data, dict) or "templates" not in data or "hints" not in data:
        raise PoolFormatError("pool must be an object with 'templates' and 'hints' sections")
    templates: dict[TaskKind, list[Template]] = {}
    hints: dict[TaskKind, list[FormatHint]] = {}
    seen_template_ids: set[str] = set()
    seen_hint_ids: set[str] = set()
    for section, sink, seen, factory in (
        ("templates", templates, seen_template_ids, Template),
        ("hints", hints, seen_hint_ids, FormatHint),
    ):
        body = data[section]
        if not isinstance(body, dict):
            raise PoolFormatError(f"'{section}' must map task names to entry lists")
        for task_name, entries in body.items():
            try:
                task = TaskKind(task_name)
            except ValueError:
                raise PoolFormatError(f"unknown task {task_name!r} in '{section}'")
            if not isinstance(entries, list):
                raise PoolFormatError(f"'{section}.{task_name}' must be a list")
            for raw in entries:
                if not isinstance(raw, dict) or "id" not in raw or "body" not in raw:
                    raise PoolFormatError(f"entries in '{section}.{task_name}' need 'id' and 'body'")
                entry_id = str(raw["id"])
                if entry_id in seen:
                    raise DuplicateId(f"duplicate {section[:-1]} id {entry_id!r}")
                seen.add(entry_id)
                entry = factory(entry_id, task, str(raw["body"]))
                if isinstance(entry, Template):
                    _validate_template(entry)
                sink.setdefault(task, []).append(entry)
    for task in TaskKind:
        if not templates.get(task):
            raise MissingMandatoryDefault(f"no templates for built-in task {task.value}")
        if not hints.get(task):
            raise MissingMandatoryDefault(f"no hints for built-in task {task.value}")
    return TemplatePool(
        templates={t: tuple(v) for t, v in templates.items()},
        hints={t: tuple(v) for t, v in hints.items()},
    )


def load_pool(path: str | Path) -> TemplatePool:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PoolFormatError(f"pool file is not valid JSON: {exc}")
    return _build_pool(data)


_default_pool_cache: TemplatePool | None = None


def default_pool() -> TemplatePool:
    """The shipped pool: at least 20 templates and 5 hints per task."""
    global _default_pool_cache
    if _default_pool_cache is None:
        text = resources.files("tablekit.data").joinpath("default_templates.json").read_text()
        _default_pool_cache = _build_pool(json.loads(text))
    return _default_pool_cache


@dataclass(frozen=True)
class ExpansionResult:
    pool: TemplatePool
    accepted: tuple[Template, ...]
    rejected: tuple[tuple[str, str], ...]  # (entry label, reason)


def expand_pool(pool: TemplatePool, command: str, timeout: float = 60.0) -> ExpansionResult:
    """Grows a pool's template lists through an external command.

    The command receives the current templates as JSON on standard input,
    shaped {"templates": {"<task>": [{"id": ..., "body": ...}, ...]}}, and
    must print candidate templates in the same shape on standard output.
    Candidates go through the same placeholder validation as pool files;
    entries that fail it (or reuse an id) are dropped and reported in
    `rejected`, never raised. Hints are not expanded. The command crashing,
    timing out, or printing something other than the expected JSON raises
    PoolExpansionError.
    """
    seed = {
        "templates": {
            task.value: [{"id": t.id, "body": t.body} for t in entries]
            for task, entries in pool.templates.items()
        }
    }
    try:
        proc = subprocess.run(
            command.split(),
            input=json.dumps(seed).encode("utf-8"),
            capture_output=True,
            timeout=timeout,
        )
    except FileNotFoundError as exc:
        raise PoolExpansionError(f"expansion command not found: {command.split()[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise PoolExpansionError(f"expansion command timed out after {timeout}s") from exc
    if proc.returncode != 0:
        detail = proc.stderr.decode("utf-8", "replace").strip()[:200]
        raise PoolExpansionError(f"expansion command exited {proc.returncode}: {detail}")
    try:
        data = json.loads(proc.stdout.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise PoolExpansionError(f"expansion command printed invalid JSON: {exc}")
    if not isinstance(data, dict) or not isinstance(data.get("templates"), dict):
        raise PoolExpansionError("expansion output must be an object with a 'templates' map")

    seen_ids = {t.id for entries in pool.templates.values() for t in entries}
    accepted: list[Template] = []
    rejected: list[tuple[str, str]] = []
    for task_name, entries in data["templates"].items():
        if not isinstance(entries, list):
            raise PoolExpansionError(f"'templates.{task_name}' must be a list")
        for i, raw in enumerate(entries):
            label = f"{task_name}[{i}]"
            try:
                task = TaskKind(task_name)
            except ValueError:
                rejected.append((label, f"unknown task {task_name!r}"))
                continue
            if not isinstance(raw, dict) or "id" not in raw or "body" not in raw:
                rejected.append((label, "entry needs 'id' and 'body'"))
                continue
            entry = Template(str(raw["id"]), task, str(raw["body"]))
            if entry.id in seen_ids:
                rejected.append((entry.id, "duplicate id"))
                continue
            try:
                _validate_template(entry)
            except PoolFormatError as exc:
                rejected.append((entry.id, str(exc)))
                continue
            seen_ids.add(entry.id)
            accepted.append(entry)

    merged: dict[TaskKind, list[Template]] = {t: list(v) for t, v in pool.templates.items()}
    for entry in accepted:
        merged.setdefault(entry.task, []).append(entry)
    new_pool = TemplatePool(
        templates={t: tuple(v) for t, v in merged.items()},
        hints=pool.hints,
    )
    return ExpansionResult(new_pool, tuple(accepted), tuple(rejected))


def build_request(
    pool: TemplatePool,
    task: TaskKind,
    task_input: dict[str, str],
    rng_seed: int,
) -> str:
    """One template and one hint, drawn uniformly and independently under the
    seed; placeholders substituted from task_input. The hint is appended after
    a newline unless the template inlines it via {format_hint}."""
    rng = random.Random(rng_seed)
    template = rng.choice(pool.templates_for(task))
    hint = rng.choice(pool.hints_for(task))
    inline_hint = "format_hint" in template.placeholders()
    values = dict(task_input)
    if inline_hint:
        values["format_hint"] = hint.body

    # single pass so substituted content is never rescanned for markers
    def _fill(match: re.Match) -> str:
        name = match.group(1)
        if name not in values:
            raise MissingPlaceholder(f"task input lacks {{{name}}} for template {template.id!r}")
        return str(values[name])

    text = _PLACEHOLDER.sub(_fill, template.body)
    if not inline_hint:
        text = text + "\n" + hint.body
    return text

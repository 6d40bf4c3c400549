"""Pulling structured answers out of free-form model responses.

The preferred route is the last balanced top-level JSON object in the
text. When no object parses, task-aware regular expressions try to
recover the answer from plain prose; failing that the trimmed text is
returned as-is. Only an empty response yields Failed. Total: never
raises on arbitrary input.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

from ..taskdefs import TaskKind


class ExtractionStatus(enum.Enum):
    PARSED_JSON = "parsed_json"
    REGEX_FALLBACK = "regex_fallback"
    RAW_TEXT = "raw_text"
    FAILED = "failed"


@dataclass(frozen=True)
class ExtractionResult:
    status: ExtractionStatus
    payload: object  # dict for the first two statuses, str for raw text, None for failed


def _match_brace(text: str, start: int) -> int | None:
    """Index of the brace closing text[start] ('{'), string-aware."""
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None


def _last_json_object(text: str) -> dict | None:
    spans: list[tuple[int, int]] = []
    i = 0
    while i < len(text):
        if text[i] == "{":
            end = _match_brace(text, i)
            if end is None:
                i += 1
            else:
                spans.append((i, end + 1))
                i = end + 1
        else:
            i += 1
    for start, end in reversed(spans):
        try:
            value = json.loads(text[start:end])
        except (json.JSONDecodeError, RecursionError):
            continue
        if isinstance(value, dict):
            return value
    return None


_TSD_ROW = re.compile(r"rows?[\s_-]*(?:number|count)?\s*(?:is|was|[:=])?\s*(\d+)", re.I)
_TSD_COL = re.compile(r"col(?:umn)?s?[\s_-]*(?:number|count)?\s*(?:is|was|[:=])?\s*(\d+)", re.I)
_TSD_ROW_REV = re.compile(r"(\d+)\s+rows?\b", re.I)
_TSD_COL_REV = re.compile(r"(\d+)\s+col(?:umn)?s?\b", re.I)

_MCD_FLAG = re.compile(r"\b(yes|no|true|false)\b", re.I)
_MCD_REGION = re.compile(
    r"[(\[]\s*[(\[]?\s*(\d+)\s*,\s*(\d+)\s*[)\]]?\s*,\s*[(\[]?\s*(\d+)\s*,\s*(\d+)\s*[)\]]?\s*[)\]]"
)

_QA_ANSWER = re.compile(r"answer\s*(?:is|[:=])\s*(.+?)\s*$", re.I | re.M)

_TCE_PAIR = re.compile(
    r"[(\[]\s*(\d+)\s*,\s*(\d+)\s*[)\]]\s*(?:->|[:=])\s*['\"]?(.*?)['\"]?\s*(?=[\n;]|$)", re.M
)
_TCL_PAIR = re.compile(
    r"['\"]([^'\"\n]+)['\"]\s*(?:->|[:=]|\bis at\b|\bat\b)\s*[(\[]\s*(\d+)\s*,\s*(\d+)\s*[)\]]",
    re.I,
)


def _fallback_tsd(text: str) -> dict | None:
    out: dict = {}
    row = _TSD_ROW.search(text) or _TSD_ROW_REV.search(text)
    col = _TSD_COL.search(text) or _TSD_COL_REV.search(text)
    if row:
        out["row_number"] = int(row.group(1))
    if col:
        out["column_number"] = int(col.group(1))
    return out or None


def _fallback_mcd(text: str) -> dict | None:
    regions = [
        [[int(m.group(1)), int(m.group(2))], [int(m.group(3)), int(m.group(4))]]
        for m in _MCD_REGION.finditer(text)
    ]
    flag = _MCD_FLAG.search(text)
    if not regions and not flag:
        return None
    has_merged = bool(regions)
    if flag:
        has_merged = flag.group(1).lower() in ("yes", "true") or bool(regions)
    return {"has_merged": has_merged, "regions": regions}


def _fallback_qa(text: str) -> dict | None:
    matches = _QA_ANSWER.findall(text)
    if not matches:
        return None
    return {"answer": matches[-1].strip().strip("'\"")}


def _fallback_tce(text: str) -> dict | None:
    cells = [
        {"position": [int(m.group(1)), int(m.group(2))], "value": m.group(3).strip()}
        for m in _TCE_PAIR.finditer(text)
    ]
    return {"cells": cells} if cells else None


def _fallback_tcl(text: str) -> dict | None:
    cells = [
        {"value": m.group(1).strip(), "position": [int(m.group(2)), int(m.group(3))]}
        for m in _TCL_PAIR.finditer(text)
    ]
    return {"cells": cells} if cells else None


_FALLBACKS = {
    TaskKind.TSD: _fallback_tsd,
    TaskKind.MCD: _fallback_mcd,
    TaskKind.QA_WRAP: _fallback_qa,
    TaskKind.TCE: _fallback_tce,
    TaskKind.TCL: _fallback_tcl,
    # TR and RCE answers are whole serialized tables / long listings; prose
    # recovery is handled by the raw-text route instead
}


def extract_json_answer(text: object, task: TaskKind | None = None) -> ExtractionResult:
    """Best-effort answer recovery; see the module docstring for the order."""
    if not isinstance(text, str):
        text = "" if text is None else str(text)
    payload = _last_json_object(text)
    if payload is not None:
        return ExtractionResult(ExtractionStatus.PARSED_JSON, payload)
    fallback = _FALLBACKS.get(task)
    if fallback is not None:
        recovered = fallback(text)
        if recovered is not None:
            return ExtractionResult(ExtractionStatus.REGEX_FALLBACK, recovered)
    trimmed = text.strip()
    if trimmed:
        return ExtractionResult(ExtractionStatus.RAW_TEXT, trimmed)
    return ExtractionResult(ExtractionStatus.FAILED, None)

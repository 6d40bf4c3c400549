"""Shared task vocabulary: the built-in task kinds and their request placeholders."""

from __future__ import annotations

import enum


class TaskKind(str, enum.Enum):
    TSD = "tsd"          # table size detection: count rows and columns
    TCE = "tce"          # cell extraction: read the values at given positions
    TCL = "tcl"          # cell locating: find the positions of given values
    MCD = "mcd"          # merged cell detection: spot merged regions
    RCE = "rce"          # row/column extraction: transcribe whole lines
    TR = "tr"            # table recognition: transcribe the full structure
    QA_WRAP = "qa_wrap"  # wraps externally supplied question/answer pairs

    def __str__(self) -> str:  # JSON-friendly
        return self.value


# placeholders a template body may reference, per task; {format_hint} is
# always allowed and inlines the selected hint instead of appending it
OPTIONAL_PLACEHOLDERS = frozenset({"format_hint"})

REQUIRED_PLACEHOLDERS: dict[TaskKind, frozenset[str]] = {
    TaskKind.TSD: frozenset(),
    TaskKind.TCE: frozenset({"cells"}),
    TaskKind.TCL: frozenset({"cells"}),
    TaskKind.MCD: frozenset(),
    TaskKind.RCE: frozenset({"cells"}),
    TaskKind.TR: frozenset({"format_name"}),
    TaskKind.QA_WRAP: frozenset({"question"}),
}


def allowed_placeholders(task: TaskKind) -> frozenset[str]:
    return REQUIRED_PLACEHOLDERS[task] | OPTIONAL_PLACEHOLDERS

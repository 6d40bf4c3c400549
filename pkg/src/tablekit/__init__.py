"""Toolkit that builds multimodal table-understanding benchmarks and
scores predictions against them.

The pieces compose left to right: a canonical table model (`core`),
strict and tolerant text formats (`formats`), deterministic SVG
rendering (`render`), instruction templating (`templates`), sample
synthesis (`tasks`), metrics (`metrics`), and a pipeline plus CLI that
tie a corpus directory to a finished dataset (`pipeline`, `cli`).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .core import AnchorCell, Grid, InvalidTable, Table, table_from_dict, table_to_dict, validate
from .formats import convert, detect_format, parse, serialize
from .formats.common import ParseError, TableFormat, UnrepresentableInFormat
from .render import DEFAULT_STYLE_MIX, StyleFamily, StyleMix, StyleSpec, render_svg, sample_style
from .taskdefs import TaskKind
from .tasks import Sample, SynthConfig, SynthResult, synthesize
from .templates import ExpansionResult, TemplatePool, default_pool, expand_pool, load_pool

__all__ = [
    "__version__",
    "AnchorCell",
    "Grid",
    "InvalidTable",
    "Table",
    "table_from_dict",
    "table_to_dict",
    "validate",
    "convert",
    "detect_format",
    "parse",
    "serialize",
    "ParseError",
    "TableFormat",
    "UnrepresentableInFormat",
    "DEFAULT_STYLE_MIX",
    "StyleFamily",
    "StyleMix",
    "StyleSpec",
    "render_svg",
    "sample_style",
    "TaskKind",
    "Sample",
    "SynthConfig",
    "SynthResult",
    "synthesize",
    "ExpansionResult",
    "TemplatePool",
    "default_pool",
    "expand_pool",
    "load_pool",
]

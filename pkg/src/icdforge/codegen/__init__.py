"""Template-driven source code generation with element-level traceability."""

from .engine import (
    Template,
    TemplateParseError,
    TemplateRenderError,
    TraceRange,
    UnknownModelField,
)
from .render import (
    DigestMismatch,
    GenReport,
    RenderError,
    TemplateSet,
    TraceReport,
    builtin_template_dir,
    list_builtin_sets,
    load_template_set,
    render,
    trace_report,
)

__all__ = [
    "DigestMismatch",
    "GenReport",
    "RenderError",
    "Template",
    "TemplateParseError",
    "TemplateRenderError",
    "TemplateSet",
    "TraceRange",
    "TraceReport",
    "UnknownModelField",
    "builtin_template_dir",
    "list_builtin_sets",
    "load_template_set",
    "render",
    "trace_report",
]

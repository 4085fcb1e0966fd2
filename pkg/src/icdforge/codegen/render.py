"""Template set loading, deterministic rendering, and trace coverage.

A template set is a directory with a ``manifest.json`` naming its outputs:

    {
      "name": "c99",
      "target": "c99-portable",
      "outputs": [
        {"scope": "device", "path": "{{device.id_lower}}_tl.h",
         "template": "device_tl.h.tpl"}
      ],
      "skips": [{"match": "*/Frames/Frame[9]", "reason": "why"}]
    }

Scopes: "document" (one output), "device" (one per device), "frame" (one per
device frame).  Rendering is a pure function of the document bytes and the
template set bytes; identical inputs produce byte-identical trees, a trace
map, and a generation report.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from ..model import ICDDocument
from ..validate import container_paths, iter_frames
from .engine import Template
from .modelview import doc_view

_SCOPES = ("document", "device", "frame")


class RenderError(Exception):
    pass


class DigestMismatch(RenderError):
    def __init__(self, expected: str, got: str):
        super().__init__(
            f"generation report was produced from digest {expected[:12]}..., "
            f"document has {got[:12]}..."
        )


@dataclass(frozen=True)
class OutputSpec:
    scope: str
    path_template: str
    template_name: str


@dataclass(frozen=True)
class SkipRule:
    """Pattern over canonical element paths; ``*`` matches any run of
    characters, everything else (including brackets) is literal."""

    match: str
    reason: str

    def matches(self, path: str) -> bool:
        pattern = ".*".join(re.escape(part) for part in self.match.split("*"))
        return re.fullmatch(pattern, path) is not None


@dataclass(frozen=True)
class TemplateSet:
    name: str
    target: str
    outputs: tuple[OutputSpec, ...]
    skips: tuple[SkipRule, ...]
    templates: dict[str, str]
    digest: str


@dataclass(frozen=True)
class TraceEntry:
    file: str
    start: int
    end: int
    path: str

    def line(self) -> str:
        return f"{self.file}:{self.start}-{self.end} {self.path}"


@dataclass(frozen=True)
class GenReport:
    files: tuple[str, ...]
    trace_map: tuple[TraceEntry, ...]
    doc_digest: str
    template_set_name: str
    template_set_digest: str
    skips: tuple[SkipRule, ...]

    def trace_map_text(self) -> str:
        return "".join(entry.line() + "\n" for entry in self.trace_map)

    def to_json(self) -> str:
        return json.dumps(
            {
                "doc_digest": self.doc_digest,
                "template_set": {
                    "name": self.template_set_name,
                    "digest": self.template_set_digest,
                },
                "files": list(self.files),
                "skips": [{"match": s.match, "reason": s.reason} for s in self.skips],
                "trace_entries": len(self.trace_map),
            },
            indent=2,
            sort_keys=True,
        ) + "\n"


def builtin_template_dir(name: str) -> Path:
    return Path(__file__).resolve().parent.parent / "templates" / name


def list_builtin_sets() -> list[str]:
    root = Path(__file__).resolve().parent.parent / "templates"
    return sorted(p.name for p in root.iterdir() if (p / "manifest.json").is_file())


def load_template_set(source: Union[str, Path]) -> TemplateSet:
    """Load from a directory path, or from a built-in set name."""
    directory = Path(source)
    if not (directory / "manifest.json").is_file():
        builtin = builtin_template_dir(str(source))
        if (builtin / "manifest.json").is_file():
            directory = builtin
        elif not directory.is_dir():
            raise RenderError(f"template set directory {source!r} does not exist")
        else:
            raise RenderError(f"template set {source!r} has no manifest.json")
    manifest_bytes = (directory / "manifest.json").read_bytes()
    try:
        manifest = json.loads(manifest_bytes)
    except json.JSONDecodeError as exc:
        raise RenderError(f"malformed manifest.json: {exc}") from exc
    name = manifest.get("name")
    if not isinstance(name, str) or not name:
        raise RenderError("manifest must carry a non-empty 'name'")
    target = manifest.get("target", "")
    outputs = []
    for entry in manifest.get("outputs", []):
        scope = entry.get("scope")
        if scope not in _SCOPES:
            raise RenderError(f"output scope must be one of {_SCOPES}, got {scope!r}")
        outputs.append(
            OutputSpec(
                scope=scope,
                path_template=entry["path"],
                template_name=entry["template"],
            )
        )
    if not outputs:
        raise RenderError("manifest declares no outputs")
    skips = tuple(
        SkipRule(match=entry["match"], reason=entry.get("reason", ""))
        for entry in manifest.get("skips", [])
    )
    templates: dict[str, str] = {}
    hasher = hashlib.sha256()
    hasher.update(manifest_bytes)
    for spec in sorted({o.template_name for o in outputs}):
        tpl_path = directory / spec
        if not tpl_path.is_file():
            raise RenderError(f"manifest names missing template file {spec!r}")
        data = tpl_path.read_bytes()
        hasher.update(spec.encode("utf-8"))
        hasher.update(len(data).to_bytes(8, "big"))
        hasher.update(data)
        templates[spec] = data.decode("utf-8")
    return TemplateSet(
        name=name,
        target=str(target),
        outputs=tuple(outputs),
        skips=skips,
        templates=templates,
        digest=hasher.hexdigest(),
    )


def _check_out_path(text: str) -> str:
    path = Path(text)
    if path.is_absolute() or ".." in path.parts or not text.strip():
        raise RenderError(f"output path {text!r} must be a clean relative path")
    return str(path)


def render(doc: ICDDocument, template_set: TemplateSet, out_dir: Union[str, Path]) -> GenReport:
    """Render every output of the set into out_dir.

    Also writes ``trace.map`` (line format ``file:start-end path``) and
    ``gen_report.json`` beside the generated files.
    """
    out_root = Path(out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    view = doc_view(doc)

    parsed: dict[str, Template] = {
        name: Template.parse(text, name=name) for name, text in template_set.templates.items()
    }

    files: dict[str, bytes] = {}
    entries: list[TraceEntry] = []
    for spec in template_set.outputs:
        template = parsed[spec.template_name]
        path_template = Template.parse(spec.path_template, name=f"{spec.template_name}:path")
        if spec.scope == "document":
            bindings_list = [{"doc": view}]
        elif spec.scope == "device":
            bindings_list = [{"doc": view, "device": dev} for dev in view.devices]
        else:
            bindings_list = [
                {"doc": view, "device": dev, "frame": frame}
                for dev in view.devices
                for frame in dev.frames
            ]
        for bindings in bindings_list:
            rel_path, path_traces = path_template.render(bindings)
            if path_traces:
                raise RenderError("output path templates must not contain trace tags")
            rel_path = _check_out_path(rel_path)
            text, traces = template.render(bindings)
            data = text.encode("utf-8")
            if rel_path in files and files[rel_path] != data:
                raise RenderError(f"two outputs write different content to {rel_path!r}")
            files[rel_path] = data
            entries.extend(
                TraceEntry(file=rel_path, start=t.start, end=t.end, path=t.path)
                for t in traces
            )

    for rel_path, data in sorted(files.items()):
        target = out_root / rel_path
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)

    report = GenReport(
        files=tuple(sorted(files)),
        trace_map=tuple(
            sorted(entries, key=lambda e: (e.file, e.start, e.end, e.path))
        ),
        doc_digest=doc.source_digest,
        template_set_name=template_set.name,
        template_set_digest=template_set.digest,
        skips=template_set.skips,
    )
    (out_root / "trace.map").write_bytes(report.trace_map_text().encode("utf-8"))
    (out_root / "gen_report.json").write_bytes(report.to_json().encode("utf-8"))
    return report


# ---------------------------------------------------------------------------
# Trace coverage


@dataclass(frozen=True)
class CoverageRow:
    path: str
    kind: str  # frame | container
    status: str  # covered | skipped | uncovered
    reason: str = ""


@dataclass(frozen=True)
class TraceReport:
    rows: tuple[CoverageRow, ...]

    @property
    def uncovered(self) -> int:
        return sum(1 for r in self.rows if r.status == "uncovered")

    @property
    def covered(self) -> int:
        return sum(1 for r in self.rows if r.status == "covered")

    @property
    def ok(self) -> bool:
        return self.uncovered == 0

    def text(self) -> str:
        lines = []
        for row in self.rows:
            suffix = f" ({row.reason})" if row.reason else ""
            lines.append(f"{row.status:<9} {row.kind:<9} {row.path}{suffix}")
        lines.append(
            f"coverage: {self.covered}/{len(self.rows)} covered, "
            f"{self.uncovered} uncovered"
        )
        return "\n".join(lines) + "\n"


def coverage_universe(doc: ICDDocument) -> list[tuple[str, str]]:
    """Every frame and container of the document, as (path, kind)."""
    universe: list[tuple[str, str]] = []
    for _, _, frame, frame_path in iter_frames(doc):
        universe.append((frame_path, "frame"))
        universe.extend((p, "container") for _, p in container_paths(frame, frame_path))
    return universe


def trace_report(gen: GenReport, doc: ICDDocument) -> TraceReport:
    """Classify every frame/container element as covered, skipped, or
    uncovered by the generation's trace map.  Requires the report to match
    the document (digest)."""
    if gen.doc_digest != doc.source_digest:
        raise DigestMismatch(gen.doc_digest, doc.source_digest)
    traced = {entry.path for entry in gen.trace_map}
    rows = []
    for path, kind in coverage_universe(doc):
        if path in traced:
            rows.append(CoverageRow(path=path, kind=kind, status="covered"))
            continue
        rule = next((s for s in gen.skips if s.matches(path)), None)
        if rule is not None:
            rows.append(
                CoverageRow(path=path, kind=kind, status="skipped", reason=rule.reason)
            )
        else:
            rows.append(CoverageRow(path=path, kind=kind, status="uncovered"))
    return TraceReport(rows=tuple(rows))

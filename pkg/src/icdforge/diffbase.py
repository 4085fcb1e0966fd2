"""Configuration baselines and element-level change reports.

A baseline is the content digest of the canonical serialization, so
whitespace or attribute-order edits do not move it while any semantic edit
does.  The diff compares two documents element by element, keyed by the
canonical xml_path, and reports added/removed subtrees (top-most node only)
plus per-attribute changes.
"""

from __future__ import annotations

import hashlib
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Optional

from .model import ICDDocument
from .xmlio import WRAPPER_TAGS, serialize_icd


def baseline_digest(doc: ICDDocument) -> str:
    return hashlib.sha256(serialize_icd(doc)).hexdigest()


@dataclass(frozen=True)
class DiffEntry:
    kind: str  # added | removed | changed
    path: str
    attr: Optional[str] = None
    old: Optional[str] = None
    new: Optional[str] = None

    def line(self) -> str:
        if self.kind == "changed":
            return f"changed {self.path} {self.attr} {self.old!r} -> {self.new!r}"
        return f"{self.kind} {self.path}"


def _flatten(doc: ICDDocument) -> dict[str, dict[str, str]]:
    """Canonical path -> attribute map over the canonical serialization."""
    root = ET.fromstring(serialize_icd(doc))
    out: dict[str, dict[str, str]] = {"/root": dict(root.attrib)}

    def walk(el: ET.Element, path: str) -> None:
        counts: dict[str, int] = {}
        for child in el:
            tag = str(child.tag)
            counts[tag] = counts.get(tag, 0) + 1
            if tag in WRAPPER_TAGS:
                cpath = f"{path}/{tag}"
            else:
                cpath = f"{path}/{tag}[{counts[tag]}]"
            out[cpath] = dict(child.attrib)
            walk(child, cpath)

    walk(root, "/root")
    return out


def _top_most(paths: set[str]) -> list[str]:
    kept = []
    for path in sorted(paths):
        if not any(path.startswith(prefix + "/") for prefix in kept):
            kept.append(path)
    return kept


def diff_documents(doc_a: ICDDocument, doc_b: ICDDocument) -> list[DiffEntry]:
    """Element-level added/removed/changed listing keyed by xml_path."""
    flat_a = _flatten(doc_a)
    flat_b = _flatten(doc_b)
    entries: list[DiffEntry] = []
    for path in _top_most(flat_a.keys() - flat_b.keys()):
        entries.append(DiffEntry(kind="removed", path=path))
    for path in _top_most(flat_b.keys() - flat_a.keys()):
        entries.append(DiffEntry(kind="added", path=path))
    for path in sorted(flat_a.keys() & flat_b.keys()):
        attrs_a, attrs_b = flat_a[path], flat_b[path]
        for attr in sorted(attrs_a.keys() | attrs_b.keys()):
            old, new = attrs_a.get(attr), attrs_b.get(attr)
            if old != new:
                entries.append(
                    DiffEntry(kind="changed", path=path, attr=attr, old=old, new=new)
                )
    entries.sort(key=lambda e: (e.path, e.kind, e.attr or ""))
    return entries


def diff_report(entries: list[DiffEntry]) -> str:
    return "".join(entry.line() + "\n" for entry in entries)

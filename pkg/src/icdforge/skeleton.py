"""I/O interface skeletons: the contract handed to functional-model authors.

A skeleton is the flattened leaf view of a device's function parameters:
name, direction, atomic type, bit offset inside the parameter's root type,
and width.  Skeletons are compared structurally; the digest covers the
sorted leaf list only, so cosmetic regeneration does not break baselines.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

from .model import ICDDocument, iter_leaf_paths
from .validate import Finding

#: skeleton rule catalogue (same Finding shape as the validator)
S_MISSING = "S1"
S_EXTRA = "S2"
S_DIRECTION = "S3"
S_TYPE = "S4"
S_OFFSET = "S5"


class DeviceIdMismatch(Exception):
    def __init__(self, expected: str, actual: str):
        super().__init__(f"skeletons describe different devices: {expected!r} vs {actual!r}")
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True)
class SkeletonLeaf:
    path: str
    direction: str
    type_name: str
    bit_offset: int
    width_bits: int

    def line(self) -> str:
        return (
            f"{self.direction} {self.path} {self.type_name} "
            f"{self.bit_offset} {self.width_bits}"
        )


@dataclass(frozen=True)
class SkeletonEntry:
    """One function parameter with its flattened leaves (sorted by path)."""

    name: str
    direction: str
    leaves: tuple[SkeletonLeaf, ...]


@dataclass(frozen=True)
class InterfaceSkeleton:
    device_id: str
    entries: tuple[SkeletonEntry, ...]
    digest: str

    @property
    def leaves(self) -> tuple[SkeletonLeaf, ...]:
        return tuple(
            sorted(
                (leaf for entry in self.entries for leaf in entry.leaves),
                key=lambda l: l.path,
            )
        )


def leaf_digest(leaves: list[SkeletonLeaf]) -> str:
    body = "".join(
        leaf.line() + "\n" for leaf in sorted(leaves, key=lambda l: l.path)
    )
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def gen_skeleton(doc: ICDDocument, device_id: str) -> InterfaceSkeleton:
    """One entry per function parameter, complex types flattened depth-first
    by element address.  Deterministic; raises UnknownDevice."""
    device = doc.device(device_id)
    directions: dict[tuple[str, str], str] = {}
    order: list[tuple[str, str]] = []
    for function in device.functions:
        for parameter in function.parameters:
            key = (function.name, parameter.name)
            if key not in directions:
                order.append(key)
                directions[key] = parameter.direction
    by_param: dict[tuple[str, str], list[SkeletonLeaf]] = {key: [] for key in order}
    for path, leaf in iter_leaf_paths(doc, device_id):
        key = (path.segments[0], path.segments[1])
        by_param[key].append(
            SkeletonLeaf(
                path=path.dotted,
                direction=directions[key],
                type_name=leaf.type_name,
                bit_offset=leaf.cumulative_bit_offset,
                width_bits=leaf.width_bits,
            )
        )
    entries = tuple(
        SkeletonEntry(
            name=param,
            direction=directions[(fn, param)],
            leaves=tuple(sorted(by_param[(fn, param)], key=lambda l: l.path)),
        )
        for fn, param in order
    )
    all_leaves = [leaf for entry in entries for leaf in entry.leaves]
    return InterfaceSkeleton(
        device_id=device_id, entries=entries, digest=leaf_digest(all_leaves)
    )


def check_io_consistency(
    expected: InterfaceSkeleton, actual: InterfaceSkeleton
) -> list[Finding]:
    """Structural comparison: missing/extra leaves and direction/type/offset
    mismatches.  Empty result means the interfaces are consistent."""
    if expected.device_id != actual.device_id:
        raise DeviceIdMismatch(expected.device_id, actual.device_id)
    exp = {leaf.path: leaf for leaf in expected.leaves}
    act = {leaf.path: leaf for leaf in actual.leaves}
    findings: list[Finding] = []
    for path in sorted(exp.keys() - act.keys()):
        findings.append(
            Finding(S_MISSING, "error", path, "leaf missing from actual interface")
        )
    for path in sorted(act.keys() - exp.keys()):
        findings.append(
            Finding(S_EXTRA, "error", path, "leaf not present in expected interface")
        )
    for path in sorted(exp.keys() & act.keys()):
        e, a = exp[path], act[path]
        if e.direction != a.direction:
            findings.append(
                Finding(
                    S_DIRECTION,
                    "error",
                    path,
                    f"direction {a.direction!r} differs from expected {e.direction!r}",
                )
            )
        if e.type_name != a.type_name or e.width_bits != a.width_bits:
            findings.append(
                Finding(
                    S_TYPE,
                    "error",
                    path,
                    f"type {a.type_name}({a.width_bits} bits) differs from "
                    f"expected {e.type_name}({e.width_bits} bits)",
                )
            )
        if e.bit_offset != a.bit_offset:
            findings.append(
                Finding(
                    S_OFFSET,
                    "error",
                    path,
                    f"bit offset {a.bit_offset} differs from expected {e.bit_offset}",
                )
            )
    return sorted(findings, key=lambda f: (f.rule_id, f.subject))


def write_skeleton_file(skeleton: InterfaceSkeleton) -> str:
    lines = [f"#device {skeleton.device_id}", f"#digest {skeleton.digest}"]
    lines.extend(leaf.line() for leaf in skeleton.leaves)
    return "\n".join(lines) + "\n"


def read_skeleton_file(text: str) -> InterfaceSkeleton:
    """Parse the structured skeleton file.

    A digest header, when present, must match the recomputed leaf digest.
    Leaves are regrouped into entries by their first two path segments.
    """
    device_id: Optional[str] = None
    declared_digest: Optional[str] = None
    leaves: list[SkeletonLeaf] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#device "):
            device_id = stripped.split(None, 1)[1].strip()
            continue
        if stripped.startswith("#digest "):
            declared_digest = stripped.split(None, 1)[1].strip()
            continue
        if stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 5:
            raise ValueError(
                f"line {lineno}: expected 'direction path type offset width', got {line!r}"
            )
        direction, path, type_name, offset_text, width_text = parts
        try:
            offset = int(offset_text)
            width = int(width_text)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        leaves.append(
            SkeletonLeaf(
                path=path,
                direction=direction,
                type_name=type_name,
                bit_offset=offset,
                width_bits=width,
            )
        )
    if device_id is None:
        raise ValueError("skeleton file carries no '#device' header")
    digest = leaf_digest(leaves)
    if declared_digest is not None and declared_digest != digest:
        raise ValueError(
            f"skeleton digest mismatch: header {declared_digest[:12]}..., "
            f"content {digest[:12]}..."
        )
    groups: dict[tuple[str, str], list[SkeletonLeaf]] = {}
    order: list[tuple[str, str]] = []
    for leaf in sorted(leaves, key=lambda l: l.path):
        segments = leaf.path.split(".")
        key = (segments[1] if len(segments) > 1 else leaf.path, leaf.direction)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(leaf)
    entries = tuple(
        SkeletonEntry(name=name, direction=direction, leaves=tuple(groups[(name, direction)]))
        for name, direction in order
    )
    return InterfaceSkeleton(device_id=device_id, entries=entries, digest=digest)

"""Integrity checking of a parsed document against the published rule catalogue.

Rules:
  V1   unresolved linked_parameter path
  V2   container bit-range overlap within a frame
  V3   container exceeds frame bounds
  V4   same connector+pin assigned to two contacts on one device
  V5   duplicate frame identifier (ID-container signature) within a port content
  V6   direction coherence between port contents and linked parameters
       (off by default; the direction convention is project-specific)
  V7   complex-type element overlap or overflow
  V8   dangling or cyclic data_type reference
  V9   duplicate sibling names
  V10  nonpositive or inconsistent declared quantity (sizes, rates, widths,
       constant values that do not fit their width)
  V11  declared container width differs from the linked leaf width
  V12  frame_type profile violation (CAN_SF: 11-bit ID container at address 0)

Findings are deterministic and sorted by (rule, subject path); an empty list
defines "validator-clean".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .model import (
    ContainerDef,
    Device,
    FrameDef,
    ICDDocument,
    ModelError,
    PortContent,
    resolve_parameter_path,
)

ERROR = "error"
WARNING = "warning"

#: Frame-type well-formedness profiles: name -> (id width, id address).
FRAME_TYPE_PROFILES: dict[str, tuple[int, int]] = {"CAN_SF": (11, 0)}


@dataclass(frozen=True)
class Finding:
    rule_id: str
    severity: str
    subject: str
    message: str
    related: Optional[str] = None

    def line(self) -> str:
        return f"{self.rule_id} {self.severity} {self.subject}: {self.message}"

    def record(self) -> str:
        return json.dumps(
            {
                "rule": self.rule_id,
                "severity": self.severity,
                "subject": self.subject,
                "message": self.message,
                "related": self.related,
            },
            sort_keys=True,
        )


@dataclass(frozen=True)
class ValidatorConfig:
    """Severity knobs for the configurable rules.

    ``direction_rule`` (V6) is off by default: the source format does not fix
    whether parameter direction is relative to the function or the device, so
    the coherence convention must be opted into per project.
    """

    direction_rule: str = "off"  # off | warning | error
    declared_width_rule: str = "error"  # off | warning | error  (V11)
    port_duplicate_severity: str = WARNING  # V9 on port names / wire roles


DEFAULT_CONFIG = ValidatorConfig()


def _sort_key(finding: Finding) -> tuple:
    return (int(finding.rule_id[1:]), finding.subject, finding.related or "", finding.message)


class Paths:
    """Canonical xml_path builders matching the canonical serialization."""

    @staticmethod
    def device(i: int) -> str:
        return f"/root/Devices/Device[{i + 1}]"

    @staticmethod
    def function(dev: str, j: int) -> str:
        return f"{dev}/Functions/Function[{j + 1}]"

    @staticmethod
    def parameter(fn: str, k: int) -> str:
        return f"{fn}/Parameters/Parameter[{k + 1}]"

    @staticmethod
    def port(dev: str, j: int) -> str:
        return f"{dev}/Ports/Port[{j + 1}]"

    @staticmethod
    def contact(port: str, k: int) -> str:
        return f"{port}/Contacts/Contact[{k + 1}]"

    @staticmethod
    def port_content(dev: str, j: int) -> str:
        return f"{dev}/Port_Contents/Port_Content[{j + 1}]"

    @staticmethod
    def frame(pc: str, k: int) -> str:
        return f"{pc}/Frames/Frame[{k + 1}]"

    @staticmethod
    def container(frame: str, wrapper: str, m: int) -> str:
        return f"{frame}/{wrapper}/Container[{m + 1}]"

    @staticmethod
    def data_type(i: int) -> str:
        return f"/root/DataTypes/DataType[{i + 1}]"

    @staticmethod
    def element(dt: str, j: int) -> str:
        return f"{dt}/Elements/Element[{j + 1}]"


def container_paths(frame: FrameDef, frame_path: str) -> list[tuple[ContainerDef, str]]:
    """All containers of a frame with canonical paths, IDs first."""
    out = [
        (c, Paths.container(frame_path, "IDs", m)) for m, c in enumerate(frame.id_containers)
    ]
    out += [
        (c, Paths.container(frame_path, "Payload", m))
        for m, c in enumerate(frame.payload_containers)
    ]
    return out


def iter_frames(doc: ICDDocument) -> list[tuple[Device, PortContent, FrameDef, str]]:
    out = []
    for i, device in enumerate(doc.devices):
        dev_path = Paths.device(i)
        for j, pc in enumerate(device.port_contents):
            pc_path = Paths.port_content(dev_path, j)
            for k, frame in enumerate(pc.frames):
                out.append((device, pc, frame, Paths.frame(pc_path, k)))
    return out


class _Run:
    def __init__(self, doc: ICDDocument, config: ValidatorConfig) -> None:
        self.doc = doc
        self.config = config
        self.findings: list[Finding] = []

    def add(
        self,
        rule: str,
        severity: str,
        subject: str,
        message: str,
        related: Optional[str] = None,
    ) -> None:
        self.findings.append(Finding(rule, severity, subject, message, related))

    # -- V9 ------------------------------------------------------------------

    def duplicates(
        self, rule_items: list[tuple[str, str]], what: str, severity: str = ERROR
    ) -> None:
        seen: dict[str, str] = {}
        for name, path in rule_items:
            if name in seen:
                self.add("V9", severity, path, f"duplicate {what} {name!r}", seen[name])
            else:
                seen[name] = path

    def check_names(self) -> None:
        doc = self.doc
        self.duplicates(
            [(d.id, Paths.device(i)) for i, d in enumerate(doc.devices)], "device id"
        )
        self.duplicates(
            [(t.name, Paths.data_type(i)) for i, t in enumerate(doc.data_types)],
            "data type name",
        )
        for i, device in enumerate(doc.devices):
            dev_path = Paths.device(i)
            self.duplicates(
                [(f.name, Paths.function(dev_path, j)) for j, f in enumerate(device.functions)],
                "function name",
            )
            for j, function in enumerate(device.functions):
                fn_path = Paths.function(dev_path, j)
                self.duplicates(
                    [
                        (p.name, Paths.parameter(fn_path, k))
                        for k, p in enumerate(function.parameters)
                    ],
                    "parameter name",
                )
            self.duplicates(
                [(p.name, Paths.port(dev_path, j)) for j, p in enumerate(device.ports)],
                "port name",
                self.config.port_duplicate_severity,
            )
            for j, port in enumerate(device.ports):
                port_path = Paths.port(dev_path, j)
                self.duplicates(
                    [
                        (c.wire, Paths.contact(port_path, k))
                        for k, c in enumerate(port.contacts)
                    ],
                    "wire role",
                    self.config.port_duplicate_severity,
                )
            self.duplicates(
                [
                    (p.name, Paths.port_content(dev_path, j))
                    for j, p in enumerate(device.port_contents)
                ],
                "port content name",
            )
            for j, pc in enumerate(device.port_contents):
                pc_path = Paths.port_content(dev_path, j)
                self.duplicates(
                    [(f.name, Paths.frame(pc_path, k)) for k, f in enumerate(pc.frames)],
                    "frame name",
                )
                for k, frame in enumerate(pc.frames):
                    frame_path = Paths.frame(pc_path, k)
                    self.duplicates(
                        [(c.name, p) for c, p in container_paths(frame, frame_path)],
                        "container name",
                    )
        for i, tdef in enumerate(doc.data_types):
            if tdef.kind == "complex":
                dt_path = Paths.data_type(i)
                self.duplicates(
                    [
                        (e.name, Paths.element(dt_path, j))
                        for j, e in enumerate(tdef.elements)
                    ],
                    "element name",
                )

    # -- V8 ------------------------------------------------------------------

    def check_references(self) -> None:
        doc = self.doc

        def missing(name: str) -> bool:
            return doc.find_type(name) is None

        for i, device in enumerate(doc.devices):
            dev_path = Paths.device(i)
            for j, function in enumerate(device.functions):
                fn_path = Paths.function(dev_path, j)
                for k, parameter in enumerate(function.parameters):
                    if missing(parameter.data_type):
                        self.add(
                            "V8",
                            ERROR,
                            Paths.parameter(fn_path, k),
                            f"parameter references unknown data type {parameter.data_type!r}",
                        )
        for i, tdef in enumerate(doc.data_types):
            dt_path = Paths.data_type(i)
            if tdef.kind == "complex":
                for j, element in enumerate(tdef.elements):
                    if missing(element.data_type):
                        self.add(
                            "V8",
                            ERROR,
                            Paths.element(dt_path, j),
                            f"element references unknown data type {element.data_type!r}",
                        )
                continue
            # atomic: the base chain must end in a built-in encoding
            if tdef.base is None:
                continue
            seen = {tdef.name}
            current = tdef
            while True:
                if current.base is None:
                    break
                base = doc.find_type(current.base)
                if base is None:
                    self.add(
                        "V8",
                        ERROR,
                        dt_path,
                        f"atomic type base {current.base!r} does not resolve",
                    )
                    break
                if not base.is_atomic:
                    self.add(
                        "V8", ERROR, dt_path, f"atomic type base {base.name!r} is not atomic"
                    )
                    break
                if base.name in seen:
                    self.add("V8", ERROR, dt_path, f"cyclic base chain through {base.name!r}")
                    break
                seen.add(base.name)
                current = base
        # cycles in complex composition
        declared = {t.name: t for t in doc.data_types}
        state: dict[str, int] = {}

        def cyclic(name: str) -> bool:
            tdef = declared.get(name)
            if tdef is None or tdef.kind != "complex":
                return False
            if state.get(name) == 1:
                return True
            if state.get(name) == 2:
                return False
            state[name] = 1
            hit = any(cyclic(e.data_type) for e in tdef.elements)
            state[name] = 2
            return hit

        for i, tdef in enumerate(doc.data_types):
            if tdef.kind == "complex":
                state.clear()
                if cyclic(tdef.name):
                    self.add(
                        "V8",
                        ERROR,
                        Paths.data_type(i),
                        f"cyclic type composition through {tdef.name!r}",
                    )

    # -- V10 -----------------------------------------------------------------

    def check_quantities(self) -> None:
        for i, tdef in enumerate(self.doc.data_types):
            if tdef.size_bits <= 0:
                self.add(
                    "V10",
                    ERROR,
                    Paths.data_type(i),
                    f"data type size must be positive, got {tdef.size_bits}",
                )
        for _, _, frame, frame_path in iter_frames(self.doc):
            if frame.size_bits <= 0:
                self.add(
                    "V10", ERROR, frame_path, f"frame size must be positive, got {frame.size_bits}"
                )
            if frame.transmit_rate_ms is not None and frame.transmit_rate_ms <= 0:
                self.add(
                    "V10",
                    ERROR,
                    frame_path,
                    f"transmit rate must be positive, got {frame.transmit_rate_ms}",
                )
            for container, path in container_paths(frame, frame_path):
                if container.width_bits is not None and container.width_bits <= 0:
                    self.add(
                        "V10",
                        ERROR,
                        path,
                        f"container width must be positive, got {container.width_bits}",
                    )
                if container.is_constant:
                    if container.width_bits is None:
                        self.add(
                            "V10", ERROR, path, "constant container must declare an explicit width"
                        )
                    elif container.width_bits > 0:
                        value = container.value or 0
                        if value < 0 or value >= (1 << container.width_bits):
                            self.add(
                                "V10",
                                ERROR,
                                path,
                                f"constant {value} does not fit in {container.width_bits} bits",
                            )

    # -- V1, V2, V3, V11 -------------------------------------------------------

    def effective_width(self, device: Device, container: ContainerDef) -> Optional[int]:
        if container.width_bits is not None and container.width_bits > 0:
            return container.width_bits
        if container.linked_parameter is not None:
            try:
                leaf = resolve_parameter_path(self.doc, device.id, container.linked_parameter)
            except ModelError:
                return None
            return leaf.width_bits
        return None

    def check_frames(self) -> None:
        for device, _, frame, frame_path in iter_frames(self.doc):
            extents: list[tuple[ContainerDef, str, int, int]] = []
            for container, path in container_paths(frame, frame_path):
                if container.linked_parameter is not None:
                    try:
                        leaf = resolve_parameter_path(
                            self.doc, device.id, container.linked_parameter
                        )
                    except ModelError as exc:
                        self.add(
                            "V1",
                            ERROR,
                            path,
                            f"linked parameter {container.linked_parameter!r} "
                            f"does not resolve: {exc}",
                        )
                        leaf = None
                    if (
                        leaf is not None
                        and container.width_bits is not None
                        and self.config.declared_width_rule != "off"
                        and container.width_bits != leaf.width_bits
                    ):
                        severity = (
                            ERROR if self.config.declared_width_rule == "error" else WARNING
                        )
                        self.add(
                            "V11",
                            severity,
                            path,
                            f"declared width {container.width_bits} differs from "
                            f"linked leaf width {leaf.width_bits}",
                        )
                width = self.effective_width(device, container)
                if width is None or width <= 0:
                    continue
                if container.address < 0 or container.address + width > frame.size_bits:
                    self.add(
                        "V3",
                        ERROR,
                        path,
                        f"container occupies bits {container.address}.."
                        f"{container.address + width - 1} outside frame of {frame.size_bits} bits",
                    )
                extents.append((container, path, container.address, container.address + width))
            for a in range(len(extents)):
                for b in range(a + 1, len(extents)):
                    c1, p1, s1, e1 = extents[a]
                    c2, p2, s2, e2 = extents[b]
                    if s1 < e2 and s2 < e1:
                        self.add(
                            "V2",
                            ERROR,
                            p2,
                            f"container {c2.name!r} overlaps {c1.name!r} "
                            f"in bits {max(s1, s2)}..{min(e1, e2) - 1}",
                            p1,
                        )

    # -- V4 ------------------------------------------------------------------

    def check_contacts(self) -> None:
        for i, device in enumerate(self.doc.devices):
            dev_path = Paths.device(i)
            seen: dict[tuple[str, str], str] = {}
            for j, port in enumerate(device.ports):
                port_path = Paths.port(dev_path, j)
                for k, contact in enumerate(port.contacts):
                    key = (contact.connector, contact.contact)
                    path = Paths.contact(port_path, k)
                    if key in seen:
                        self.add(
                            "V4",
                            ERROR,
                            path,
                            f"connector pin {contact.connector}/{contact.contact} "
                            "assigned to two contacts",
                            seen[key],
                        )
                    else:
                        seen[key] = path

    # -- V5 ------------------------------------------------------------------

    def check_frame_ids(self) -> None:
        for i, device in enumerate(self.doc.devices):
            dev_path = Paths.device(i)
            for j, pc in enumerate(device.port_contents):
                pc_path = Paths.port_content(dev_path, j)
                seen: dict[tuple, str] = {}
                for k, frame in enumerate(pc.frames):
                    signature = tuple(
                        sorted(
                            (c.address, c.width_bits, c.value) for c in frame.id_containers
                        )
                    )
                    frame_path = Paths.frame(pc_path, k)
                    if signature in seen:
                        self.add(
                            "V5",
                            ERROR,
                            frame_path,
                            f"frame identifier signature duplicates {seen[signature]}",
                            seen[signature],
                        )
                    else:
                        seen[signature] = frame_path

    # -- V6 ------------------------------------------------------------------

    def check_directions(self) -> None:
        if self.config.direction_rule == "off":
            return
        severity = ERROR if self.config.direction_rule == "error" else WARNING
        for device, pc, frame, frame_path in iter_frames(self.doc):
            for m, container in enumerate(frame.payload_containers):
                if container.linked_parameter is None:
                    continue
                segments = container.linked_parameter.split(".")
                if len(segments) < 2:
                    continue
                function = next((f for f in device.functions if f.name == segments[0]), None)
                if function is None:
                    continue
                parameter = next(
                    (p for p in function.parameters if p.name == segments[1]), None
                )
                if parameter is None:
                    continue
                if parameter.direction != pc.direction:
                    self.add(
                        "V6",
                        severity,
                        Paths.container(frame_path, "Payload", m),
                        f"{pc.direction} port content links parameter "
                        f"{parameter.name!r} with direction {parameter.direction!r}",
                    )

    # -- V7 ------------------------------------------------------------------

    def check_complex_layout(self) -> None:
        for i, tdef in enumerate(self.doc.data_types):
            if tdef.kind != "complex":
                continue
            dt_path = Paths.data_type(i)
            extents = []
            for j, element in enumerate(tdef.elements):
                inner = self.doc.find_type(element.data_type)
                if inner is None or inner.size_bits <= 0:
                    continue  # V8/V10 report the underlying defect
                path = Paths.element(dt_path, j)
                if element.address < 0 or element.address + inner.size_bits > tdef.size_bits:
                    self.add(
                        "V7",
                        ERROR,
                        path,
                        f"element occupies bits {element.address}.."
                        f"{element.address + inner.size_bits - 1} outside type of "
                        f"{tdef.size_bits} bits",
                    )
                extents.append((element, path, element.address, element.address + inner.size_bits))
            for a in range(len(extents)):
                for b in range(a + 1, len(extents)):
                    e1, p1, s1, x1 = extents[a]
                    e2, p2, s2, x2 = extents[b]
                    if s1 < x2 and s2 < x1:
                        self.add(
                            "V7",
                            ERROR,
                            p2,
                            f"element {e2.name!r} overlaps {e1.name!r} "
                            f"in bits {max(s1, s2)}..{min(x1, x2) - 1}",
                            p1,
                        )

    # -- V12 -----------------------------------------------------------------

    def check_frame_profiles(self) -> None:
        for _, _, frame, frame_path in iter_frames(self.doc):
            profile = FRAME_TYPE_PROFILES.get(frame.frame_type or "")
            if profile is None:
                continue
            width, address = profile
            satisfied = any(
                c.address == address and c.width_bits == width for c in frame.id_containers
            )
            if not satisfied:
                self.add(
                    "V12",
                    ERROR,
                    frame_path,
                    f"frame type {frame.frame_type!r} requires a constant "
                    f"{width}-bit ID container at address {address}",
                )


def validate(doc: ICDDocument, config: ValidatorConfig = DEFAULT_CONFIG) -> list[Finding]:
    """Run all rules; an empty result defines a validator-clean document."""
    run = _Run(doc, config)
    run.check_names()
    run.check_references()
    run.check_quantities()
    run.check_frames()
    run.check_contacts()
    run.check_frame_ids()
    run.check_directions()
    run.check_complex_layout()
    run.check_frame_profiles()
    return sorted(run.findings, key=_sort_key)


def has_errors(findings: list[Finding]) -> bool:
    return any(f.severity == ERROR for f in findings)


def report_text(findings: list[Finding]) -> str:
    return "".join(f.line() + "\n" for f in findings)


def report_machine(findings: list[Finding]) -> str:
    return "".join(f.record() + "\n" for f in findings)

"""Bit-exact parser and canonical serializer for the XML ICD definition file.

The element vocabulary is fixed: root, Devices, Device, Functions, Function,
Parameters, Parameter, Ports, Port, Contacts, Contact, Port_Contents,
Port_Content, Frames, Frame, IDs, Payload, Container, DataTypes, DataType,
Elements, Element.  Unknown elements and attributes are preserved in an
extras side-table and re-emitted on serialization, so round-tripping never
destroys vendor extensions.

Canonical form: UTF-8, one space of indentation per depth level, a fixed
attribute order per element kind, constant container values rendered as
0x-prefixed uppercase hex, all other numbers decimal.
"""

from __future__ import annotations

import hashlib
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .model import (
    BUILTIN_TYPES,
    Contact,
    ContainerDef,
    DataTypeDef,
    Device,
    ElementDef,
    ExtraNode,
    Extras,
    FrameDef,
    FunctionBlock,
    ICDDocument,
    ModelError,
    Parameter,
    Port,
    PortContent,
    flatten_type,
    resolve_parameter_path,
)

WRAPPER_TAGS = frozenset(
    {
        "root",
        "Devices",
        "Functions",
        "Parameters",
        "Ports",
        "Contacts",
        "Port_Contents",
        "Frames",
        "IDs",
        "Payload",
        "DataTypes",
        "Elements",
    }
)

# Canonical attribute order, as in the generated-artifact layout.
KNOWN_ATTRS: dict[str, tuple[str, ...]] = {
    "Device": ("name", "id"),
    "Function": ("name", "layer"),
    "Parameter": ("name", "direction", "data_type"),
    "Port": ("name", "bus_type", "direction"),
    "Contact": ("wire", "connector", "contact"),
    "Port_Content": ("name", "direction"),
    "Frame": ("name", "size", "transmit_rate_ms", "type"),
    "Container": ("name", "address", "width", "value", "linked_parameter"),
    "DataType": ("name", "type", "size", "data_type", "byte_order", "scale", "offset"),
    "Element": ("name", "address", "data_type"),
}

_DECIMAL_RE = re.compile(r"^-?[0-9]+$")
_HEX_RE = re.compile(r"^0[xX][0-9a-fA-F]+$")


@dataclass(frozen=True)
class ParseIssue:
    """One parser diagnostic, located by a slash-separated element path with
    1-based sibling indices (wrapper elements carry no index)."""

    severity: str  # error | warning
    xml_path: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity} {self.xml_path}: {self.message}"


@dataclass
class ParseResult:
    document: Optional[ICDDocument]
    issues: list[ParseIssue]

    @property
    def ok(self) -> bool:
        return self.document is not None

    @property
    def errors(self) -> list[ParseIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[ParseIssue]:
        return [i for i in self.issues if i.severity == "warning"]


def source_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class _Parser:
    def __init__(self) -> None:
        self.issues: list[ParseIssue] = []

    def error(self, path: str, message: str) -> None:
        self.issues.append(ParseIssue("error", path, message))

    def warning(self, path: str, message: str) -> None:
        self.issues.append(ParseIssue("warning", path, message))

    def errors_present(self) -> bool:
        return any(issue.severity == "error" for issue in self.issues)

    # -- generic helpers ---------------------------------------------------

    def children(self, el: ET.Element, path: str) -> list[tuple[ET.Element, str]]:
        counts: dict[str, int] = {}
        out = []
        for child in el:
            tag = str(child.tag)
            counts[tag] = counts.get(tag, 0) + 1
            if tag in WRAPPER_TAGS:
                cpath = f"{path}/{tag}"
            else:
                cpath = f"{path}/{tag}[{counts[tag]}]"
            out.append((child, cpath))
        return out

    def check_text(self, el: ET.Element, path: str) -> None:
        if el.text and el.text.strip():
            self.warning(path, "text content is not part of the format and is not preserved")

    def split_attrs(
        self, el: ET.Element, path: str, kind: str
    ) -> tuple[dict[str, str], tuple[tuple[str, str], ...]]:
        known = KNOWN_ATTRS.get(kind, ())
        found: dict[str, str] = {}
        extra: list[tuple[str, str]] = []
        for key, value in el.attrib.items():
            if key in known:
                found[key] = value
            else:
                self.warning(path, f"unknown attribute {key!r} preserved without interpretation")
                extra.append((key, value))
        return found, tuple(sorted(extra))

    def require(self, attrs: dict[str, str], name: str, path: str) -> Optional[str]:
        if name not in attrs:
            self.error(path, f"missing required attribute {name!r}")
            return None
        return attrs[name]

    def parse_int(self, text: Optional[str], path: str, attr: str) -> Optional[int]:
        if text is None:
            return None
        stripped = text.strip()
        if _HEX_RE.match(stripped):
            return int(stripped, 16)
        if _DECIMAL_RE.match(stripped):
            return int(stripped, 10)
        self.error(path, f"attribute {attr!r} must be a decimal or 0x-hex number, got {text!r}")
        return None

    def parse_fraction(self, text: Optional[str], path: str, attr: str) -> Optional[Fraction]:
        if text is None:
            return None
        try:
            return Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            self.error(path, f"attribute {attr!r} must be a rational number, got {text!r}")
            return None

    def parse_enum(
        self, text: Optional[str], allowed: tuple[str, ...], path: str, attr: str
    ) -> Optional[str]:
        if text is None:
            return None
        if text not in allowed:
            self.error(path, f"attribute {attr!r} must be one of {'/'.join(allowed)}, got {text!r}")
            return None
        return text

    def warn_duplicates(self, names: list[Optional[str]], paths: list[str], what: str) -> None:
        seen: dict[str, str] = {}
        for name, path in zip(names, paths):
            if name is None:
                continue
            if name in seen:
                self.warning(path, f"duplicate {what} {name!r} (first at {seen[name]})")
            else:
                seen[name] = path

    def extra_node(self, el: ET.Element, path: str, announce: bool = True) -> ExtraNode:
        if announce:
            self.warning(path, f"unknown element <{el.tag}> preserved without interpretation")
        children = tuple(self.extra_node(child, path, announce=False) for child in el)
        text = (el.text or "").strip() or None
        if text and children:
            self.warning(path, "mixed content inside unknown element is not preserved")
            text = None
        return ExtraNode(
            tag=str(el.tag),
            attrs=tuple(sorted((str(k), str(v)) for k, v in el.attrib.items())),
            text=text,
            children=children,
        )

    def wrapper_items(
        self, el: ET.Element, path: str, wrapper: str, item_tag: str
    ) -> tuple[list[tuple[ET.Element, str]], list[tuple[str, ExtraNode]]]:
        """Collect item elements under optional wrapper children, plus extras.

        Returns (items under the wrapper, extras found there with their slot).
        """
        items: list[tuple[ET.Element, str]] = []
        extras: list[tuple[str, ExtraNode]] = []
        for child, cpath in self.children(el, path):
            if child.tag != wrapper:
                continue
            self.check_text(child, cpath)
            for key in child.attrib:
                self.warning(cpath, f"attribute {key!r} on wrapper element ignored")
            for item, ipath in self.children(child, cpath):
                if item.tag == item_tag:
                    items.append((item, ipath))
                else:
                    extras.append((wrapper, self.extra_node(item, ipath)))
        return items, extras

    def direct_extras(self, el: ET.Element, path: str, known_tags: frozenset[str]) -> list[
        tuple[str, ExtraNode]
    ]:
        out = []
        for child, cpath in self.children(el, path):
            if child.tag not in known_tags:
                out.append(("", self.extra_node(child, cpath)))
        return out

    # -- element parsers ---------------------------------------------------

    def parse_contact(self, el: ET.Element, path: str) -> Optional[Contact]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Contact")
        wire = self.require(attrs, "wire", path)
        connector = self.require(attrs, "connector", path)
        contact = self.require(attrs, "contact", path)
        extras = Extras(attrs=extra_attrs, children=tuple(self.direct_extras(el, path, frozenset())))
        if wire is None or connector is None or contact is None:
            return None
        return Contact(wire=wire, connector=connector, contact=contact, extras=extras)

    def parse_port(self, el: ET.Element, path: str) -> Optional[Port]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Port")
        name = self.require(attrs, "name", path)
        bus_type = self.require(attrs, "bus_type", path)
        direction = self.parse_enum(
            self.require(attrs, "direction", path), ("in", "out", "duplex"), path, "direction"
        )
        items, wrapper_extras = self.wrapper_items(el, path, "Contacts", "Contact")
        contacts = [self.parse_contact(item, ipath) for item, ipath in items]
        extras = Extras(
            attrs=extra_attrs,
            children=tuple(self.direct_extras(el, path, frozenset({"Contacts"})) + wrapper_extras),
        )
        if name is None or bus_type is None or direction is None or None in contacts:
            return None
        return Port(
            name=name,
            bus_type=bus_type,
            direction=direction,
            contacts=tuple(c for c in contacts if c is not None),
            extras=extras,
        )

    def parse_parameter(self, el: ET.Element, path: str) -> Optional[Parameter]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Parameter")
        name = self.require(attrs, "name", path)
        direction = self.parse_enum(
            self.require(attrs, "direction", path), ("in", "out"), path, "direction"
        )
        data_type = self.require(attrs, "data_type", path)
        extras = Extras(attrs=extra_attrs, children=tuple(self.direct_extras(el, path, frozenset())))
        if name is None or direction is None or data_type is None:
            return None
        return Parameter(name=name, direction=direction, data_type=data_type, extras=extras)

    def parse_function(self, el: ET.Element, path: str) -> Optional[FunctionBlock]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Function")
        name = self.require(attrs, "name", path)
        layer = attrs.get("layer")
        items, wrapper_extras = self.wrapper_items(el, path, "Parameters", "Parameter")
        parameters = [self.parse_parameter(item, ipath) for item, ipath in items]
        self.warn_duplicates(
            [p.name if p else None for p in parameters], [ip for _, ip in items], "parameter name"
        )
        extras = Extras(
            attrs=extra_attrs,
            children=tuple(self.direct_extras(el, path, frozenset({"Parameters"})) + wrapper_extras),
        )
        if name is None or None in parameters:
            return None
        return FunctionBlock(
            name=name,
            layer=layer,
            parameters=tuple(p for p in parameters if p is not None),
            extras=extras,
        )

    def parse_container(self, el: ET.Element, path: str, constant: bool) -> Optional[ContainerDef]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Container")
        name = self.require(attrs, "name", path)
        address = self.parse_int(self.require(attrs, "address", path), path, "address")
        width = self.parse_int(attrs.get("width"), path, "width")
        value = self.parse_int(attrs.get("value"), path, "value")
        linked = attrs.get("linked_parameter")
        if value is not None and linked is not None:
            self.error(path, "container declares both value and linked_parameter")
            return None
        if value is None and linked is None:
            self.error(path, "container declares neither value nor linked_parameter")
            return None
        if constant and value is None:
            self.error(path, "containers under IDs must be constant-valued")
            return None
        if not constant and linked is None:
            self.error(path, "containers under Payload must declare linked_parameter")
            return None
        extras = Extras(attrs=extra_attrs, children=tuple(self.direct_extras(el, path, frozenset())))
        if name is None or address is None:
            return None
        return ContainerDef(
            name=name,
            address=address,
            width_bits=width,
            value=value,
            linked_parameter=linked,
            extras=extras,
        )

    def parse_frame(self, el: ET.Element, path: str) -> Optional[FrameDef]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Frame")
        name = self.require(attrs, "name", path)
        size = self.parse_int(self.require(attrs, "size", path), path, "size")
        rate = self.parse_int(attrs.get("transmit_rate_ms"), path, "transmit_rate_ms")
        frame_type = attrs.get("type")
        id_items, id_extras = self.wrapper_items(el, path, "IDs", "Container")
        payload_items, payload_extras = self.wrapper_items(el, path, "Payload", "Container")
        ids = [self.parse_container(item, ipath, constant=True) for item, ipath in id_items]
        payloads = [self.parse_container(item, ipath, constant=False) for item, ipath in payload_items]
        self.warn_duplicates(
            [c.name if c else None for c in ids + payloads],
            [ip for _, ip in id_items + payload_items],
            "container name",
        )
        extras = Extras(
            attrs=extra_attrs,
            children=tuple(
                self.direct_extras(el, path, frozenset({"IDs", "Payload"}))
                + id_extras
                + payload_extras
            ),
        )
        if name is None or size is None or None in ids or None in payloads:
            return None
        return FrameDef(
            name=name,
            size_bits=size,
            transmit_rate_ms=rate,
            frame_type=frame_type,
            id_containers=tuple(c for c in ids if c is not None),
            payload_containers=tuple(c for c in payloads if c is not None),
            extras=extras,
        )

    def parse_port_content(self, el: ET.Element, path: str) -> Optional[PortContent]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Port_Content")
        name = self.require(attrs, "name", path)
        direction = self.parse_enum(
            self.require(attrs, "direction", path), ("in", "out"), path, "direction"
        )
        items, wrapper_extras = self.wrapper_items(el, path, "Frames", "Frame")
        frames = [self.parse_frame(item, ipath) for item, ipath in items]
        self.warn_duplicates(
            [f.name if f else None for f in frames], [ip for _, ip in items], "frame name"
        )
        extras = Extras(
            attrs=extra_attrs,
            children=tuple(self.direct_extras(el, path, frozenset({"Frames"})) + wrapper_extras),
        )
        if name is None or direction is None or None in frames:
            return None
        return PortContent(
            name=name,
            direction=direction,
            frames=tuple(f for f in frames if f is not None),
            extras=extras,
        )

    def parse_device(self, el: ET.Element, path: str) -> Optional[Device]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Device")
        name = self.require(attrs, "name", path)
        dev_id = self.require(attrs, "id", path)

        fn_items, fn_extras = self.wrapper_items(el, path, "Functions", "Function")
        functions = [self.parse_function(item, ipath) for item, ipath in fn_items]
        self.warn_duplicates(
            [f.name if f else None for f in functions], [ip for _, ip in fn_items], "function name"
        )

        port_items, port_extras = self.wrapper_items(el, path, "Ports", "Port")
        ports = [self.parse_port(item, ipath) for item, ipath in port_items]
        self.warn_duplicates(
            [p.name if p else None for p in ports], [ip for _, ip in port_items], "port name"
        )

        pc_items, pc_extras = self.wrapper_items(el, path, "Port_Contents", "Port_Content")
        port_contents = [self.parse_port_content(item, ipath) for item, ipath in pc_items]
        self.warn_duplicates(
            [p.name if p else None for p in port_contents],
            [ip for _, ip in pc_items],
            "port content name",
        )

        extras = Extras(
            attrs=extra_attrs,
            children=tuple(
                self.direct_extras(el, path, frozenset({"Functions", "Ports", "Port_Contents"}))
                + fn_extras
                + port_extras
                + pc_extras
            ),
        )
        if name is None or dev_id is None:
            return None
        if None in functions or None in ports or None in port_contents:
            return None
        return Device(
            name=name,
            id=dev_id,
            functions=tuple(f for f in functions if f is not None),
            ports=tuple(p for p in ports if p is not None),
            port_contents=tuple(p for p in port_contents if p is not None),
            extras=extras,
        )

    def parse_element_def(self, el: ET.Element, path: str) -> Optional[ElementDef]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "Element")
        name = self.require(attrs, "name", path)
        address = self.parse_int(self.require(attrs, "address", path), path, "address")
        data_type = self.require(attrs, "data_type", path)
        extras = Extras(attrs=extra_attrs, children=tuple(self.direct_extras(el, path, frozenset())))
        if name is None or address is None or data_type is None:
            return None
        return ElementDef(name=name, address=address, data_type=data_type, extras=extras)

    def parse_data_type(self, el: ET.Element, path: str) -> Optional[DataTypeDef]:
        self.check_text(el, path)
        attrs, extra_attrs = self.split_attrs(el, path, "DataType")
        name = self.require(attrs, "name", path)
        kind_label = self.parse_enum(
            self.require(attrs, "type", path), ("Complex", "Atomic"), path, "type"
        )
        size = self.parse_int(attrs.get("size"), path, "size")
        if kind_label is None or name is None:
            return None

        if kind_label == "Complex":
            for attr in ("data_type", "byte_order", "scale", "offset"):
                if attr in attrs:
                    self.error(path, f"attribute {attr!r} is not applicable to complex types")
                    return None
            if size is None:
                if "size" not in attrs:
                    self.error(path, "missing required attribute 'size'")
                return None
            items, wrapper_extras = self.wrapper_items(el, path, "Elements", "Element")
            elements = [self.parse_element_def(item, ipath) for item, ipath in items]
            self.warn_duplicates(
                [e.name if e else None for e in elements], [ip for _, ip in items], "element name"
            )
            extras = Extras(
                attrs=extra_attrs,
                children=tuple(self.direct_extras(el, path, frozenset({"Elements"})) + wrapper_extras),
            )
            if None in elements:
                return None
            return DataTypeDef(
                name=name,
                kind="complex",
                size_bits=size,
                elements=tuple(e for e in elements if e is not None),
                extras=extras,
            )

        base = self.require(attrs, "data_type", path)
        byte_order = self.parse_enum(attrs.get("byte_order"), ("big", "little"), path, "byte_order")
        if "byte_order" in attrs and byte_order is None:
            return None
        scale = self.parse_fraction(attrs.get("scale"), path, "scale")
        if scale is not None and scale == 0:
            self.error(path, "scale must be nonzero")
            return None
        offset = self.parse_fraction(attrs.get("offset"), path, "offset")
        extras = Extras(
            attrs=extra_attrs, children=tuple(self.direct_extras(el, path, frozenset()))
        )
        if base is None:
            return None
        # size may be inherited from the base chain; resolved in a second pass.
        return DataTypeDef(
            name=name,
            kind="atomic",
            size_bits=size if size is not None else -1,
            base=base,
            byte_order=byte_order,
            scale=scale,
            offset=offset,
            extras=extras,
        )

    def finish_atomic_sizes(
        self, types: list[Optional[DataTypeDef]], paths: list[str]
    ) -> list[Optional[DataTypeDef]]:
        """Inherit missing atomic sizes/byte orders through base chains and
        sanity-check the overrides the encoding class constrains."""
        by_name = {t.name: t for t in types if t is not None}

        def inherited(tdef: DataTypeDef, seen: set[str]) -> Optional[tuple[DataTypeDef, int, str]]:
            """What tdef inherits from its base: (builtin root, size, byte order).
            Intermediate declared types apply their own overrides in order."""
            if tdef.base is None or tdef.base in seen:
                return None
            seen.add(tdef.base)
            base = by_name.get(tdef.base) or BUILTIN_TYPES.get(tdef.base)
            if base is None or not base.is_atomic:
                return None
            if base.encoding is not None:  # built-in
                return base, base.size_bits, base.encoding.byte_order
            chain = inherited(base, seen)
            if chain is None:
                return None
            root, size, order = chain
            if base.size_bits >= 0:
                size = base.size_bits
            if base.byte_order is not None:
                order = base.byte_order
            return root, size, order

        out: list[Optional[DataTypeDef]] = []
        for tdef, path in zip(types, paths):
            if tdef is None or tdef.kind != "atomic":
                out.append(tdef)
                continue
            chain = inherited(tdef, {tdef.name})
            if tdef.size_bits < 0:
                if chain is None:
                    self.error(path, "size cannot be inferred from an unresolvable base type")
                    out.append(None)
                    continue
                tdef = DataTypeDef(
                    name=tdef.name,
                    kind="atomic",
                    size_bits=chain[1],
                    base=tdef.base,
                    byte_order=tdef.byte_order,
                    scale=tdef.scale,
                    offset=tdef.offset,
                    extras=tdef.extras,
                )
            if chain is not None:
                root, _, inherited_order = chain
                cls = root.encoding.numeric_class if root.encoding else ""
                if cls in ("ieee_float", "boolean") and tdef.size_bits != root.size_bits:
                    self.error(path, f"{cls} types cannot resize their base width")
                    out.append(None)
                    continue
                if cls in ("unsigned", "signed") and not 1 <= tdef.size_bits <= 64:
                    self.error(path, "integer widths must be between 1 and 64 bits")
                    out.append(None)
                    continue
                order = tdef.byte_order if tdef.byte_order is not None else inherited_order
                if order == "little" and tdef.size_bits % 8 != 0:
                    self.error(
                        path, "little byte order requires a width that is a multiple of 8"
                    )
                    out.append(None)
                    continue
            elif tdef.byte_order == "little" and tdef.size_bits % 8 != 0:
                self.error(path, "little byte order requires a width that is a multiple of 8")
                out.append(None)
                continue
            out.append(tdef)
        return out


def parse_icd(data: Union[bytes, str]) -> ParseResult:
    """Parse XML ICD bytes into a document.

    Errors imply no document is returned; warnings (unknown content,
    duplicate names) leave the document usable so the validator can report
    rule findings against it.
    """
    raw = data.encode("utf-8") if isinstance(data, str) else data
    parser = _Parser()
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        parser.error("/", f"malformed XML: {exc}")
        return ParseResult(None, parser.issues)

    if root.tag != "root":
        parser.error(f"/{root.tag}", "document root element must be <root>")
        return ParseResult(None, parser.issues)

    path = "/root"
    parser.check_text(root, path)
    root_extra_attrs = tuple(sorted((str(k), str(v)) for k, v in root.attrib.items()))
    for key, _ in root_extra_attrs:
        parser.warning(path, f"unknown attribute {key!r} preserved without interpretation")

    device_items, device_extras = parser.wrapper_items(root, path, "Devices", "Device")
    devices = [parser.parse_device(item, ipath) for item, ipath in device_items]
    parser.warn_duplicates(
        [d.id if d else None for d in devices], [ip for _, ip in device_items], "device id"
    )

    type_items, type_extras = parser.wrapper_items(root, path, "DataTypes", "DataType")
    type_paths = [ipath for _, ipath in type_items]
    data_types = [parser.parse_data_type(item, ipath) for item, ipath in type_items]
    parser.warn_duplicates(
        [t.name if t else None for t in data_types], type_paths, "data type name"
    )
    data_types = parser.finish_atomic_sizes(data_types, type_paths)

    root_extras = Extras(
        attrs=root_extra_attrs,
        children=tuple(
            parser.direct_extras(root, path, frozenset({"Devices", "DataTypes"}))
            + device_extras
            + type_extras
        ),
    )

    if parser.errors_present():
        return ParseResult(None, parser.issues)
    document = ICDDocument(
        devices=tuple(d for d in devices if d is not None),
        data_types=tuple(t for t in data_types if t is not None),
        source_digest=source_digest(raw),
        extras=root_extras,
    )
    return ParseResult(document, parser.issues)


# ---------------------------------------------------------------------------
# Canonical serialization


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")
    )


def format_fraction(fr: Fraction) -> str:
    """Shortest exact rendering: integer, exact decimal, or num/den."""
    if fr.denominator == 1:
        return str(fr.numerator)
    den = fr.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{fr.numerator}/{fr.denominator}"
    digits = max(twos, fives)
    scaled = abs(fr.numerator) * 10**digits // fr.denominator
    body = str(scaled).rjust(digits + 1, "0")
    sign = "-" if fr.numerator < 0 else ""
    return f"{sign}{body[:-digits]}.{body[-digits:]}"


def _format_value(value: int) -> str:
    if value < 0:
        return str(value)
    return f"0x{value:X}"


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"

    def emit(self, depth: int, line: str) -> None:
        self.lines.append(" " * depth + line)

    def tag(
        self,
        name: str,
        attrs: list[tuple[str, str]],
        extras: tuple[tuple[str, str], ...] = (),
    ) -> str:
        rendered = "".join(f' {k}="{_escape(v)}"' for k, v in list(attrs) + list(extras))
        return f"<{name}{rendered}>"

    def leaf(
        self,
        depth: int,
        name: str,
        attrs: list[tuple[str, str]],
        extras: tuple[tuple[str, str], ...] = (),
    ) -> None:
        rendered = "".join(f' {k}="{_escape(v)}"' for k, v in list(attrs) + list(extras))
        self.emit(depth, f"<{name}{rendered}/>")

    def extra(self, depth: int, node: ExtraNode) -> None:
        attrs = "".join(f' {k}="{_escape(v)}"' for k, v in node.attrs)
        if node.children:
            self.emit(depth, f"<{node.tag}{attrs}>")
            for child in node.children:
                self.extra(depth + 1, child)
            self.emit(depth, f"</{node.tag}>")
        elif node.text is not None:
            self.emit(depth, f"<{node.tag}{attrs}>{_escape(node.text)}</{node.tag}>")
        else:
            self.emit(depth, f"<{node.tag}{attrs}/>")

    def block(
        self,
        depth: int,
        name: str,
        attrs: list[tuple[str, str]],
        extras: Extras,
        body,
    ) -> None:
        """Emit an element whose body callback writes children at depth+1."""
        probe = len(self.lines)
        self.lines.append("")  # placeholder for the opening tag
        body(depth + 1)
        for slot, node in extras.children:
            if slot == "":
                self.extra(depth + 1, node)
        if len(self.lines) == probe + 1:
            self.lines.pop()
            self.leaf(depth, name, attrs, extras.attrs)
        else:
            self.lines[probe] = " " * depth + self.tag(name, attrs, extras.attrs)
            self.emit(depth, f"</{name}>")

    def wrapper(self, depth: int, name: str, items, emit_item, extras_children=()) -> None:
        """Always-present wrapper element; self-closes when empty."""
        slot_nodes = [node for slot, node in extras_children if slot == name]
        if not items and not slot_nodes:
            self.emit(depth, f"<{name}/>")
            return
        self.emit(depth, f"<{name}>")
        for item in items:
            emit_item(depth + 1, item)
        for node in slot_nodes:
            self.extra(depth + 1, node)
        self.emit(depth, f"</{name}>")


def serialize_icd(doc: ICDDocument) -> bytes:
    """Render the canonical byte form: parse(serialize(doc)) equals doc and
    serialization is byte-idempotent."""
    w = _Writer()

    def emit_contact(depth: int, contact: Contact) -> None:
        attrs = [("wire", contact.wire), ("connector", contact.connector), ("contact", contact.contact)]
        w.leaf(depth, "Contact", attrs, contact.extras.attrs)

    def emit_parameter(depth: int, parameter: Parameter) -> None:
        attrs = [
            ("name", parameter.name),
            ("direction", parameter.direction),
            ("data_type", parameter.data_type),
        ]
        w.leaf(depth, "Parameter", attrs, parameter.extras.attrs)

    def emit_container(depth: int, container: ContainerDef) -> None:
        attrs = [("name", container.name), ("address", str(container.address))]
        if container.width_bits is not None:
            attrs.append(("width", str(container.width_bits)))
        if container.value is not None:
            attrs.append(("value", _format_value(container.value)))
        if container.linked_parameter is not None:
            attrs.append(("linked_parameter", container.linked_parameter))
        w.leaf(depth, "Container", attrs, container.extras.attrs)

    def emit_frame(depth: int, frame: FrameDef) -> None:
        attrs = [("name", frame.name), ("size", str(frame.size_bits))]
        if frame.transmit_rate_ms is not None:
            attrs.append(("transmit_rate_ms", str(frame.transmit_rate_ms)))
        if frame.frame_type is not None:
            attrs.append(("type", frame.frame_type))

        def body(d: int) -> None:
            w.wrapper(d, "IDs", frame.id_containers, emit_container, frame.extras.children)
            w.wrapper(d, "Payload", frame.payload_containers, emit_container, frame.extras.children)

        w.block(depth, "Frame", attrs, frame.extras, body)

    def emit_port_content(depth: int, pc: PortContent) -> None:
        attrs = [("name", pc.name), ("direction", pc.direction)]

        def body(d: int) -> None:
            w.wrapper(d, "Frames", pc.frames, emit_frame, pc.extras.children)

        w.block(depth, "Port_Content", attrs, pc.extras, body)

    def emit_port(depth: int, port: Port) -> None:
        attrs = [("name", port.name), ("bus_type", port.bus_type), ("direction", port.direction)]

        def body(d: int) -> None:
            w.wrapper(d, "Contacts", port.contacts, emit_contact, port.extras.children)

        w.block(depth, "Port", attrs, port.extras, body)

    def emit_function(depth: int, function: FunctionBlock) -> None:
        attrs = [("name", function.name)]
        if function.layer is not None:
            attrs.append(("layer", function.layer))

        def body(d: int) -> None:
            w.wrapper(d, "Parameters", function.parameters, emit_parameter, function.extras.children)

        w.block(depth, "Function", attrs, function.extras, body)

    def emit_device(depth: int, device: Device) -> None:
        attrs = [("name", device.name), ("id", device.id)]

        def body(d: int) -> None:
            w.wrapper(d, "Functions", device.functions, emit_function, device.extras.children)
            w.wrapper(d, "Ports", device.ports, emit_port, device.extras.children)
            w.wrapper(d, "Port_Contents", device.port_contents, emit_port_content, device.extras.children)

        w.block(depth, "Device", attrs, device.extras, body)

    def emit_element(depth: int, element: ElementDef) -> None:
        attrs = [
            ("name", element.name),
            ("address", str(element.address)),
            ("data_type", element.data_type),
        ]
        w.leaf(depth, "Element", attrs, element.extras.attrs)

    def emit_data_type(depth: int, tdef: DataTypeDef) -> None:
        if tdef.kind == "complex":
            attrs = [("name", tdef.name), ("type", "Complex"), ("size", str(tdef.size_bits))]

            def body(d: int) -> None:
                w.wrapper(d, "Elements", tdef.elements, emit_element, tdef.extras.children)

            w.block(depth, "DataType", attrs, tdef.extras, body)
            return
        attrs = [("name", tdef.name), ("type", "Atomic"), ("size", str(tdef.size_bits))]
        if tdef.base is not None:
            attrs.append(("data_type", tdef.base))
        if tdef.byte_order is not None:
            attrs.append(("byte_order", tdef.byte_order))
        if tdef.scale is not None:
            attrs.append(("scale", format_fraction(tdef.scale)))
        if tdef.offset is not None:
            attrs.append(("offset", format_fraction(tdef.offset)))

        def body(d: int) -> None:
            pass

        w.block(depth, "DataType", attrs, tdef.extras, body)

    def root_body(d: int) -> None:
        w.wrapper(d, "Devices", doc.devices, emit_device, doc.extras.children)
        w.wrapper(d, "DataTypes", doc.data_types, emit_data_type, doc.extras.children)

    w.block(0, "root", [], doc.extras, root_body)
    return w.text().encode("utf-8")


# ---------------------------------------------------------------------------
# Review rendering


def _bits_label(address: int, width: Optional[int]) -> str:
    if width is None:
        return f"{address}..?"
    if width == 1:
        return str(address)
    return f"{address}..{address + width - 1}"


def _constant_label(value: int, width: int) -> str:
    if width > 4 and value >= 0:
        return f"0x{value:X}"
    return str(value)


def render_review(doc: ICDDocument) -> str:
    """Deterministic plain-text review report of a parsed document.

    Shows, per device, the flattened function I/O with bit offsets, the port
    pinouts, and a bit-layout table per frame.
    """
    out: list[str] = []
    out.append("# ICD review")
    out.append("")
    out.append(f"Devices: {len(doc.devices)}; declared data types: {len(doc.data_types)}.")

    for device in doc.devices:
        out.append("")
        out.append(f"## Device {device.name} ({device.id})")
        out.append("")
        out.append("### Functions")
        if not device.functions:
            out.append("(none)")
        for function in device.functions:
            layer = f" [{function.layer}]" if function.layer else ""
            out.append(f"- {function.name}{layer}")
            for parameter in function.parameters:
                out.append(
                    f"  - {parameter.name} direction={parameter.direction} "
                    f"type={parameter.data_type}"
                )
                try:
                    rows = list(flatten_type(doc, parameter.data_type))
                except ModelError as exc:
                    out.append(f"    ! unresolved: {exc}")
                    continue
                for rel_path, offset, leaf_type in rows:
                    dotted = ".".join((function.name, parameter.name, *rel_path))
                    out.append(f"    {offset:>6} {leaf_type.size_bits:>3} {dotted} {leaf_type.name}")
        out.append("")
        out.append("### Ports")
        if not device.ports:
            out.append("(none)")
        for port in device.ports:
            out.append(f"- {port.name} bus={port.bus_type} direction={port.direction}")
            for contact in port.contacts:
                out.append(f"  - {contact.wire} -> {contact.connector}/{contact.contact}")
        out.append("")
        out.append("### Frames")
        if not any(pc.frames for pc in device.port_contents):
            out.append("(none)")
        for pc in device.port_contents:
            for frame in pc.frames:
                rate = f", rate {frame.transmit_rate_ms} ms" if frame.transmit_rate_ms else ""
                ftype = f", type {frame.frame_type}" if frame.frame_type else ""
                out.append(f"#### {frame.name} ({pc.name}, {pc.direction}) size {frame.size_bits} bits{rate}{ftype}")
                for container in sorted(frame.containers, key=lambda c: (c.address, c.name)):
                    if container.is_constant:
                        width = container.width_bits
                        label = _bits_label(container.address, width)
                        const = _constant_label(container.value or 0, width or 0)
                        out.append(f"{label} {container.name} = {const}")
                    else:
                        width: Optional[int] = container.width_bits
                        detail = ""
                        try:
                            leaf = resolve_parameter_path(
                                doc, device.id, container.linked_parameter or ""
                            )
                            width = width if width is not None else leaf.width_bits
                            detail = f" ({leaf.type_name}, {leaf.width_bits} bits)"
                        except ModelError:
                            detail = " (unresolved)"
                        label = _bits_label(container.address, width)
                        out.append(
                            f"{label} {container.name} <- {container.linked_parameter}{detail}"
                        )
                out.append("")
    return "\n".join(out).rstrip("\n") + "\n"

"""In-memory domain model of an interface control document.

The model ties three layers together: physical ports (connectors and pins),
transport frames (bit-addressed containers), and logical parameters (typed
function I/O).  Everything here is immutable after construction; all
operations are pure functions of their inputs.

Bit addressing convention: address 0 is the first transmitted bit of a
frame, and within a container bits are placed most-significant-first.
Multi-byte values are transmitted most-significant-byte-first unless the
leaf type declares little byte order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union


class ModelError(Exception):
    """Base class for model resolution failures."""


class UnknownDevice(ModelError):
    def __init__(self, device_id: str):
        super().__init__(f"unknown device {device_id!r}")
        self.device_id = device_id


class UnknownType(ModelError):
    def __init__(self, type_name: str):
        super().__init__(f"unknown data type {type_name!r}")
        self.type_name = type_name


class CyclicType(ModelError):
    def __init__(self, type_name: str):
        super().__init__(f"cyclic data type composition at {type_name!r}")
        self.type_name = type_name


class UnknownSegment(ModelError):
    def __init__(self, name: str, position: int):
        super().__init__(f"unknown path segment {name!r} at position {position}")
        self.name = name
        self.position = position


class NonAtomicLeaf(ModelError):
    def __init__(self, path: str, type_name: str):
        super().__init__(f"path {path!r} ends on non-atomic type {type_name!r}")
        self.path = path
        self.type_name = type_name


class UnknownFrame(ModelError):
    def __init__(self, device_id: str, frame_name: str, detail: str = ""):
        msg = f"unknown frame {frame_name!r} on device {device_id!r}"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.device_id = device_id
        self.frame_name = frame_name


class MissingWidth(ModelError):
    def __init__(self, container_name: str):
        super().__init__(f"constant container {container_name!r} declares no width")
        self.container_name = container_name


@dataclass(frozen=True)
class ExtraNode:
    """Unknown XML element preserved verbatim for round-tripping."""

    tag: str
    attrs: tuple[tuple[str, str], ...] = ()
    text: Optional[str] = None
    children: tuple["ExtraNode", ...] = ()


@dataclass(frozen=True)
class Extras:
    """Unknown attributes and child elements attached to a known node.

    ``children`` pairs each preserved element with the wrapper slot it was
    found under ("" for a direct child), so canonical serialization can put
    it back where it came from.
    """

    attrs: tuple[tuple[str, str], ...] = ()
    children: tuple[tuple[str, ExtraNode], ...] = ()

    def __bool__(self) -> bool:
        return bool(self.attrs or self.children)


NO_EXTRAS = Extras()


@dataclass(frozen=True)
class AtomicEncoding:
    """Effective wire encoding of an atomic type.

    ``scale``/``offset`` convert raw wire values to engineering units:
    value = raw * scale + offset.  Identity by default.
    """

    numeric_class: str  # unsigned | signed | ieee_float | boolean
    byte_order: str = "big"
    scale: Fraction = Fraction(1)
    offset: Fraction = Fraction(0)

    @property
    def is_identity(self) -> bool:
        return self.scale == 1 and self.offset == 0


@dataclass(frozen=True)
class ElementDef:
    name: str
    address: int
    data_type: str
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class DataTypeDef:
    """Atomic or complex (element-composed) data type.

    Declared atomic types reference a base type (ultimately a built-in) and
    may override size, byte order, scale, and offset; built-ins carry their
    encoding directly.
    """

    name: str
    kind: str  # atomic | complex
    size_bits: int
    base: Optional[str] = None
    byte_order: Optional[str] = None
    scale: Optional[Fraction] = None
    offset: Optional[Fraction] = None
    encoding: Optional[AtomicEncoding] = None  # built-ins only
    elements: tuple[ElementDef, ...] = ()
    extras: Extras = NO_EXTRAS

    @property
    def is_atomic(self) -> bool:
        return self.kind == "atomic"


@dataclass(frozen=True)
class ContainerDef:
    """Bit-addressed field of a frame: constant-valued or parameter-linked."""

    name: str
    address: int
    width_bits: Optional[int] = None
    value: Optional[int] = None
    linked_parameter: Optional[str] = None
    extras: Extras = NO_EXTRAS

    @property
    def is_constant(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class FrameDef:
    name: str
    size_bits: int
    transmit_rate_ms: Optional[int] = None
    frame_type: Optional[str] = None
    id_containers: tuple[ContainerDef, ...] = ()
    payload_containers: tuple[ContainerDef, ...] = ()
    extras: Extras = NO_EXTRAS

    @property
    def containers(self) -> tuple[ContainerDef, ...]:
        return self.id_containers + self.payload_containers


@dataclass(frozen=True)
class PortContent:
    name: str
    direction: str  # in | out
    frames: tuple[FrameDef, ...] = ()
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class Contact:
    wire: str
    connector: str
    contact: str
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class Port:
    name: str
    bus_type: str
    direction: str  # in | out | duplex
    contacts: tuple[Contact, ...] = ()
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class Parameter:
    name: str
    direction: str  # in | out (carried verbatim; only validator rule V6 interprets it)
    data_type: str
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class FunctionBlock:
    name: str
    layer: Optional[str] = None
    parameters: tuple[Parameter, ...] = ()
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class Device:
    name: str
    id: str
    functions: tuple[FunctionBlock, ...] = ()
    ports: tuple[Port, ...] = ()
    port_contents: tuple[PortContent, ...] = ()
    extras: Extras = NO_EXTRAS


@dataclass(frozen=True)
class ICDDocument:
    """Root of a parsed ICD: devices plus the data-type dictionary.

    ``source_digest`` is the content hash of the originating bytes and is
    excluded from structural equality.
    """

    devices: tuple[Device, ...] = ()
    data_types: tuple[DataTypeDef, ...] = ()
    source_digest: str = field(default="", compare=False)
    extras: Extras = NO_EXTRAS

    def device(self, device_id: str) -> Device:
        for dev in self.devices:
            if dev.id == device_id:
                return dev
        raise UnknownDevice(device_id)

    def find_type(self, name: str) -> Optional[DataTypeDef]:
        """Declared types shadow built-ins of the same name."""
        for tdef in self.data_types:
            if tdef.name == name:
                return tdef
        return BUILTIN_TYPES.get(name)


def _builtin(name: str, size: int, numeric_class: str) -> DataTypeDef:
    return DataTypeDef(
        name=name,
        kind="atomic",
        size_bits=size,
        encoding=AtomicEncoding(numeric_class=numeric_class),
    )


BUILTIN_TYPES: dict[str, DataTypeDef] = {
    t.name: t
    for t in (
        _builtin("bool", 1, "boolean"),
        _builtin("uint8", 8, "unsigned"),
        _builtin("uint16", 16, "unsigned"),
        _builtin("uint32", 32, "unsigned"),
        _builtin("uint64", 64, "unsigned"),
        _builtin("int8", 8, "signed"),
        _builtin("int16", 16, "signed"),
        _builtin("int32", 32, "signed"),
        _builtin("int64", 64, "signed"),
        _builtin("float32", 32, "ieee_float"),
        _builtin("float64", 64, "ieee_float"),
    )
}


@dataclass(frozen=True)
class ParameterPath:
    """Device-scoped dotted path: function, parameter, then element names."""

    device_id: str
    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.segments) < 2:
            raise ValueError("parameter path needs at least function and parameter segments")

    @classmethod
    def from_dotted(cls, device_id: str, dotted: str) -> "ParameterPath":
        return cls(device_id=device_id, segments=tuple(dotted.split(".")))

    @property
    def dotted(self) -> str:
        return ".".join(self.segments)


@dataclass(frozen=True)
class ResolvedLeaf:
    """Atomic leaf reached by a parameter path."""

    type_name: str
    encoding: AtomicEncoding
    cumulative_bit_offset: int
    width_bits: int


def effective_encoding(doc: ICDDocument, tdef: DataTypeDef) -> AtomicEncoding:
    """Resolve an atomic type's encoding through its base chain.

    Raises UnknownType on a dangling base and CyclicType on base cycles.
    """
    if tdef.encoding is not None:
        return tdef.encoding
    seen = {tdef.name}
    overrides: list[DataTypeDef] = [tdef]
    current = tdef
    while current.encoding is None:
        if current.base is None:
            raise UnknownType(current.name)
        base = doc.find_type(current.base)
        if base is None:
            raise UnknownType(current.base)
        if not base.is_atomic:
            raise UnknownType(current.base)
        if base.name in seen:
            raise CyclicType(base.name)
        seen.add(base.name)
        overrides.append(base)
        current = base
    enc = current.encoding
    assert enc is not None
    byte_order, scale, offset = enc.byte_order, enc.scale, enc.offset
    for td in reversed(overrides[:-1]):
        if td.byte_order is not None:
            byte_order = td.byte_order
        if td.scale is not None:
            scale = td.scale
        if td.offset is not None:
            offset = td.offset
    return AtomicEncoding(
        numeric_class=enc.numeric_class, byte_order=byte_order, scale=scale, offset=offset
    )


PathLike = Union[str, Sequence[str], ParameterPath]


def _segments_of(path: PathLike) -> tuple[str, ...]:
    if isinstance(path, ParameterPath):
        return path.segments
    if isinstance(path, str):
        return tuple(path.split("."))
    return tuple(path)


def resolve_parameter_path(doc: ICDDocument, device_id: str, path: PathLike) -> ResolvedLeaf:
    """Walk function -> parameter -> elements to the atomic leaf a path names.

    The cumulative bit offset is the sum of the element addresses along the
    way, i.e. the leaf's position inside the parameter's root type.
    """
    device = doc.device(device_id)
    segments = _segments_of(path)
    if len(segments) < 2:
        raise UnknownSegment(".".join(segments) or "<empty>", 0)

    function = next((f for f in device.functions if f.name == segments[0]), None)
    if function is None:
        raise UnknownSegment(segments[0], 0)
    parameter = next((p for p in function.parameters if p.name == segments[1]), None)
    if parameter is None:
        raise UnknownSegment(segments[1], 1)

    type_name = parameter.data_type
    offset = 0
    for position in range(2, len(segments) + 1):
        tdef = doc.find_type(type_name)
        if tdef is None:
            raise UnknownType(type_name)
        if position == len(segments):
            if not tdef.is_atomic:
                raise NonAtomicLeaf(".".join(segments), tdef.name)
            return ResolvedLeaf(
                type_name=tdef.name,
                encoding=effective_encoding(doc, tdef),
                cumulative_bit_offset=offset,
                width_bits=tdef.size_bits,
            )
        seg = segments[position]
        if tdef.is_atomic:
            raise UnknownSegment(seg, position)
        element = next((e for e in tdef.elements if e.name == seg), None)
        if element is None:
            raise UnknownSegment(seg, position)
        offset += element.address
        type_name = element.data_type
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class TypeWidth:
    """Declared width of a type plus, for complex types, the minimum width
    implied by its elements (max of address + element width)."""

    declared_bits: int
    computed_min_bits: int


def type_bit_width(doc: ICDDocument, type_name: str) -> TypeWidth:
    tdef = doc.find_type(type_name)
    if tdef is None:
        raise UnknownType(type_name)
    if tdef.is_atomic:
        return TypeWidth(declared_bits=tdef.size_bits, computed_min_bits=tdef.size_bits)
    computed = 0
    for element in tdef.elements:
        inner = type_bit_width(doc, element.data_type)
        computed = max(computed, element.address + inner.declared_bits)
    return TypeWidth(declared_bits=tdef.size_bits, computed_min_bits=computed)


def container_width(doc: ICDDocument, device: Union[Device, str], container: ContainerDef) -> int:
    """Width in bits: the explicit declaration, else the linked leaf's width.

    Constant containers must declare a width explicitly.
    """
    if container.width_bits is not None:
        return container.width_bits
    if container.is_constant or container.linked_parameter is None:
        raise MissingWidth(container.name)
    device_id = device if isinstance(device, str) else device.id
    leaf = resolve_parameter_path(doc, device_id, container.linked_parameter)
    return leaf.width_bits


def flatten_type(
    doc: ICDDocument, type_name: str, _visiting: Optional[frozenset[str]] = None
) -> Iterator[tuple[tuple[str, ...], int, DataTypeDef]]:
    """Yield (relative element path, bit offset, atomic type) depth-first by
    element address.  An atomic root yields one entry with an empty path."""
    tdef = doc.find_type(type_name)
    if tdef is None:
        raise UnknownType(type_name)
    if tdef.is_atomic:
        yield (), 0, tdef
        return
    visiting = _visiting or frozenset()
    if tdef.name in visiting:
        raise CyclicType(tdef.name)
    for element in sorted(tdef.elements, key=lambda e: (e.address, e.name)):
        for rel_path, rel_offset, leaf_type in flatten_type(
            doc, element.data_type, visiting | {tdef.name}
        ):
            yield (element.name, *rel_path), element.address + rel_offset, leaf_type


def iter_leaf_paths(doc: ICDDocument, device_id: str) -> Iterator[tuple[ParameterPath, ResolvedLeaf]]:
    """Enumerate every resolvable leaf path of a device's function parameters."""
    device = doc.device(device_id)
    for function in device.functions:
        for parameter in function.parameters:
            for rel_path, offset, leaf_type in flatten_type(doc, parameter.data_type):
                path = ParameterPath(
                    device_id=device_id,
                    segments=(function.name, parameter.name, *rel_path),
                )
                leaf = ResolvedLeaf(
                    type_name=leaf_type.name,
                    encoding=effective_encoding(doc, leaf_type),
                    cumulative_bit_offset=offset,
                    width_bits=leaf_type.size_bits,
                )
                yield path, leaf


def find_frame(doc: ICDDocument, device_id: str, frame_name: str) -> tuple[PortContent, FrameDef]:
    """Locate a frame by name across a device's port contents.

    Frame names are only unique per port content; an ambiguous name across
    port contents is rejected rather than silently picking one.
    """
    device = doc.device(device_id)
    matches = [
        (pc, frame)
        for pc in device.port_contents
        for frame in pc.frames
        if frame.name == frame_name
    ]
    if not matches:
        raise UnknownFrame(device_id, frame_name)
    if len(matches) > 1:
        raise UnknownFrame(device_id, frame_name, "ambiguous across port contents")
    return matches[0]

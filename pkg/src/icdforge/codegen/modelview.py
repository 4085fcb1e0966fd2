"""Read-only wrappers exposing the document to templates.

Templates see plain attributes: names, addresses, widths, canonical element
paths for trace anchors, and precomputed low-level helpers (byte spans,
masks, C type names and literals) so the template language itself can stay
free of bit arithmetic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..codec import bit_spans
from ..model import (
    Device,
    FrameDef,
    ICDDocument,
    ModelError,
    ResolvedLeaf,
    resolve_parameter_path,
)
from ..validate import Paths


class ModelViewError(Exception):
    """Raised when a document cannot be prepared for rendering (resolution
    failures that the validator would have reported)."""


def c_identifier(text: str) -> str:
    ident = re.sub(r"[^A-Za-z0-9_]", "_", text)
    if not ident or ident[0].isdigit():
        ident = "_" + ident
    return ident


@dataclass(frozen=True)
class SpanView:
    byte: int
    value_shift: int
    mask_hex: str
    byte_shift: int


def _span_views(address: int, width: int) -> tuple[SpanView, ...]:
    return tuple(
        SpanView(
            byte=s.byte,
            value_shift=s.value_shift,
            mask_hex=f"{s.mask:X}",
            byte_shift=s.byte_shift,
        )
        for s in bit_spans(address, width)
    )


_C_UNSIGNED = ((8, "uint8_t"), (16, "uint16_t"), (32, "uint32_t"), (64, "uint64_t"))
_C_SIGNED = ((8, "int8_t"), (16, "int16_t"), (32, "int32_t"), (64, "int64_t"))

#: kind ids used by the generated reflection table (harness contract)
KIND_IDS = {
    "bool": 0,
    "unsigned": 1,
    "signed": 2,
    "float32": 3,
    "float64": 4,
    "scaled": 5,
}


@dataclass(frozen=True)
class LeafView:
    path: str
    field: str
    width: int
    kind: str  # bool|unsigned|signed|float32|float64|scaled_{unsigned,signed,float32,float64}
    kind_id: int
    c_type: str
    byte_order: str
    multibyte: bool
    nbytes: int
    mask_hex: str
    full64: bool
    sign_bit_hex: str
    sign_ext_hex: str
    scaled: bool
    scale_lit: str
    offset_lit: str


def _leaf_view(path: str, leaf: ResolvedLeaf) -> LeafView:
    enc = leaf.encoding
    width = leaf.width_bits
    cls = enc.numeric_class
    scaled = not enc.is_identity
    if cls == "boolean":
        kind, c_type = "bool", "bool"
    elif cls == "ieee_float":
        kind = "float32" if width == 32 else "float64"
        c_type = "float" if width == 32 else "double"
    elif cls == "signed":
        kind = "signed"
        c_type = next(t for bits, t in _C_SIGNED if width <= bits)
    else:
        kind = "unsigned"
        c_type = next(t for bits, t in _C_UNSIGNED if width <= bits)
    if scaled:
        kind = f"scaled_{kind}"
        c_type = "double"
    kind_id = KIND_IDS["scaled"] if scaled else KIND_IDS[kind]
    mask = (1 << width) - 1
    sign_bit = 1 << (width - 1) if width > 0 else 0
    sign_ext = ((1 << 64) - 1) ^ mask
    return LeafView(
        path=path,
        field=c_identifier(path),
        width=width,
        kind=kind,
        kind_id=kind_id,
        c_type=c_type,
        byte_order=enc.byte_order,
        multibyte=width > 8 and width % 8 == 0,
        nbytes=width // 8 if width % 8 == 0 else 0,
        mask_hex=f"{mask:X}",
        full64=width == 64,
        sign_bit_hex=f"{sign_bit:X}",
        sign_ext_hex=f"{sign_ext:X}",
        scaled=scaled,
        scale_lit=repr(float(enc.scale)),
        offset_lit=repr(float(enc.offset)),
    )


@dataclass(frozen=True)
class IdContainerView:
    name: str
    address: int
    width: int
    end_bit: int
    value: int
    value_hex: str
    trace_path: str
    spans: tuple[SpanView, ...]


@dataclass(frozen=True)
class PayloadContainerView:
    name: str
    address: int
    width: int
    end_bit: int
    path: str
    trace_path: str
    leaf: LeafView
    spans: tuple[SpanView, ...]


@dataclass(frozen=True)
class FrameView:
    name: str
    c_symbol: str
    struct_name: str
    size_bits: int
    byte_length: int
    has_rate: bool
    rate_ms: int
    has_type: bool
    frame_type: str
    trace_path: str
    id_containers: tuple[IdContainerView, ...]
    payload_containers: tuple[PayloadContainerView, ...]
    payload_count: int
    container_count: int


@dataclass(frozen=True)
class DeviceView:
    name: str
    id: str
    id_lower: str
    id_upper: str
    c_symbol: str
    guard: str
    trace_path: str
    frames: tuple[FrameView, ...]
    frame_count: int
    has_frames: bool
    needs_f32: bool
    needs_f64: bool
    needs_swap: bool
    needs_round: bool


@dataclass(frozen=True)
class DocView:
    source_digest: str
    devices: tuple[DeviceView, ...]
    device_count: int


def _frame_view(
    doc: ICDDocument, device: Device, frame: FrameDef, frame_path: str
) -> FrameView:
    dev_sym = c_identifier(device.id)
    ids = []
    for m, container in enumerate(frame.id_containers):
        if container.width_bits is None or container.width_bits <= 0:
            raise ModelViewError(
                f"constant container {container.name!r} in frame {frame.name!r} "
                "has no usable width (document is not validator-clean)"
            )
        ids.append(
            IdContainerView(
                name=container.name,
                address=container.address,
                width=container.width_bits,
                end_bit=container.address + container.width_bits - 1,
                value=container.value or 0,
                value_hex=f"0x{container.value or 0:X}",
                trace_path=Paths.container(frame_path, "IDs", m),
                spans=_span_views(container.address, container.width_bits),
            )
        )
    payloads = []
    for m, container in enumerate(frame.payload_containers):
        link = container.linked_parameter or ""
        try:
            leaf = resolve_parameter_path(doc, device.id, link)
        except ModelError as exc:
            raise ModelViewError(
                f"payload container {container.name!r} in frame {frame.name!r} "
                f"does not resolve: {exc}"
            ) from exc
        payloads.append(
            PayloadContainerView(
                name=container.name,
                address=container.address,
                width=leaf.width_bits,
                end_bit=container.address + leaf.width_bits - 1,
                path=link,
                trace_path=Paths.container(frame_path, "Payload", m),
                leaf=_leaf_view(link, leaf),
                spans=_span_views(container.address, leaf.width_bits),
            )
        )
    return FrameView(
        name=frame.name,
        c_symbol=f"{dev_sym}_{c_identifier(frame.name)}",
        struct_name=f"{dev_sym}_{c_identifier(frame.name)}_t",
        size_bits=frame.size_bits,
        byte_length=(frame.size_bits + 7) // 8,
        has_rate=frame.transmit_rate_ms is not None,
        rate_ms=frame.transmit_rate_ms or 0,
        has_type=frame.frame_type is not None,
        frame_type=frame.frame_type or "",
        trace_path=frame_path,
        id_containers=tuple(ids),
        payload_containers=tuple(payloads),
        payload_count=len(payloads),
        container_count=len(ids) + len(payloads),
    )


def device_view(doc: ICDDocument, device: Device, index: int) -> DeviceView:
    dev_path = Paths.device(index)
    frames = []
    for j, pc in enumerate(device.port_contents):
        pc_path = Paths.port_content(dev_path, j)
        for k, frame in enumerate(pc.frames):
            frames.append(_frame_view(doc, device, frame, Paths.frame(pc_path, k)))
    leaves = [c.leaf for f in frames for c in f.payload_containers]
    return DeviceView(
        name=device.name,
        id=device.id,
        id_lower=device.id.lower(),
        id_upper=device.id.upper(),
        c_symbol=c_identifier(device.id),
        guard=f"ICDTL_{c_identifier(device.id).upper()}_TL_H",
        trace_path=dev_path,
        frames=tuple(frames),
        frame_count=len(frames),
        has_frames=bool(frames),
        needs_f32=any(leaf.kind in ("float32", "scaled_float32") for leaf in leaves),
        needs_f64=any(leaf.kind in ("float64", "scaled_float64") for leaf in leaves),
        needs_swap=any(leaf.byte_order == "little" and leaf.multibyte for leaf in leaves),
        needs_round=any(
            leaf.kind in ("scaled_unsigned", "scaled_signed") for leaf in leaves
        ),
    )


def doc_view(doc: ICDDocument) -> DocView:
    devices = tuple(device_view(doc, d, i) for i, d in enumerate(doc.devices))
    return DocView(
        source_digest=doc.source_digest, devices=devices, device_count=len(devices)
    )

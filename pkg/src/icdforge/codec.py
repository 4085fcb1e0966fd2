"""Interpretive frame encoder/decoder: the authoritative bitstream oracle.

Packing convention: bit address 0 is the first transmitted bit and maps to
the most significant bit of byte 0; containers place their raw value
most-significant-bit-first; the final byte of a frame is zero-padded.
Multi-byte leaves are transmitted most-significant-byte-first unless their
type declares little byte order, in which case the raw value's byte
sequence is reversed before placement.

Engineering conversion: value = raw * scale + offset on decode.  Encoding
inverts it, rounding half away from zero for integer classes, and never
saturates silently: out-of-range values are hard errors.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .model import (
    AtomicEncoding,
    ContainerDef,
    FrameDef,
    ICDDocument,
    MissingWidth,
    ResolvedLeaf,
    find_frame,
    resolve_parameter_path,
)

Number = Union[int, float]

_MASK64 = (1 << 64) - 1


class CodecError(Exception):
    """Base class for encode/decode failures."""


class MissingValue(CodecError):
    def __init__(self, path: str):
        super().__init__(f"no value supplied for leaf {path!r}")
        self.path = path


class RangeExceeded(CodecError):
    def __init__(self, path: str, value: Number, detail: str):
        super().__init__(f"value {value!r} for {path!r} out of range: {detail}")
        self.path = path
        self.value = value


class LengthMismatch(CodecError):
    def __init__(self, expected_bits: int, got_bits: int):
        super().__init__(f"bitstream carries {got_bits} bits, frame defines {expected_bits}")
        self.expected_bits = expected_bits
        self.got_bits = got_bits


class IdMismatch(CodecError):
    def __init__(self, container: str, expected: int, found: int):
        super().__init__(
            f"ID container {container!r} expected 0x{expected:X}, found 0x{found:X}"
        )
        self.container = container
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class Bitstream:
    """MSB-first packed octets; padding bits in the final byte are zero."""

    bit_length: int
    data: bytes

    def __post_init__(self) -> None:
        if len(self.data) != (self.bit_length + 7) // 8:
            raise ValueError("byte length does not match bit length")

    def hex(self) -> str:
        return self.data.hex()

    @classmethod
    def from_hex(cls, bit_length: int, text: str) -> "Bitstream":
        return cls(bit_length=bit_length, data=bytes.fromhex(text.strip()))


@dataclass(frozen=True)
class BitSpan:
    """One byte-aligned slice of a container placement."""

    byte: int
    value_shift: int
    mask: int
    byte_shift: int


def bit_spans(address: int, width: int) -> list[BitSpan]:
    """Decompose [address, address+width) into per-byte spans (MSB-first)."""
    spans = []
    k = 0
    while k < width:
        bit = address + k
        offset = bit % 8
        run = min(8 - offset, width - k)
        spans.append(
            BitSpan(
                byte=bit // 8,
                value_shift=width - k - run,
                mask=(1 << run) - 1,
                byte_shift=8 - offset - run,
            )
        )
        k += run
    return spans


def place_bits(buf: bytearray, address: int, width: int, raw: int) -> None:
    for span in bit_spans(address, width):
        buf[span.byte] |= ((raw >> span.value_shift) & span.mask) << span.byte_shift


def extract_bits(buf: bytes, address: int, width: int) -> int:
    raw = 0
    for span in bit_spans(address, width):
        raw |= ((buf[span.byte] >> span.byte_shift) & span.mask) << span.value_shift
    return raw


def swap_if_little(raw: int, width: int, encoding: AtomicEncoding) -> int:
    """Reverse the byte order of a byte-aligned raw value for little types."""
    if encoding.byte_order != "little" or width % 8 != 0 or width <= 8:
        return raw
    nbytes = width // 8
    return int.from_bytes(raw.to_bytes(nbytes, "big")[::-1], "big")


def _round_half_away(q: Fraction) -> int:
    if q >= 0:
        return math.floor(q + Fraction(1, 2))
    return -math.floor(-q + Fraction(1, 2))


def integer_range(encoding: AtomicEncoding, width: int) -> tuple[int, int]:
    if encoding.numeric_class == "boolean":
        return 0, 1
    if encoding.numeric_class == "signed":
        return -(1 << (width - 1)), (1 << (width - 1)) - 1
    return 0, (1 << width) - 1


def encode_raw(leaf: ResolvedLeaf, value: Number, path: str) -> int:
    """Engineering value -> raw wire integer (unsigned, width bits)."""
    enc = leaf.encoding
    width = leaf.width_bits
    if enc.numeric_class == "ieee_float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RangeExceeded(path, value, "float leaf needs a real value")
        target = (float(value) - float(enc.offset)) / float(enc.scale)
        if not math.isfinite(target):
            raise RangeExceeded(path, value, "not finite after inverse scaling")
        fmt = ">f" if width == 32 else ">d"
        try:
            packed = struct.pack(fmt, target)
        except OverflowError:
            raise RangeExceeded(path, value, "magnitude exceeds the float range") from None
        if not math.isfinite(struct.unpack(fmt, packed)[0]):
            raise RangeExceeded(path, value, "magnitude exceeds the float range")
        return int.from_bytes(packed, "big")

    if isinstance(value, bool):
        value = int(value)
    if not isinstance(value, (int, float)):
        raise RangeExceeded(path, value, "integer leaf needs a numeric value")
    if isinstance(value, float) and not math.isfinite(value):
        raise RangeExceeded(path, value, "not finite")
    if enc.is_identity:
        if isinstance(value, float):
            if value != int(value):
                raise RangeExceeded(path, value, "unscaled integer leaf needs an integral value")
            value = int(value)
        raw_signed = value
    else:
        raw_signed = _round_half_away((Fraction(value) - enc.offset) / enc.scale)
    lo, hi = integer_range(enc, width)
    if raw_signed < lo or raw_signed > hi:
        raise RangeExceeded(path, value, f"raw {raw_signed} outside [{lo}, {hi}]")
    return raw_signed & ((1 << width) - 1)


def decode_raw(leaf: ResolvedLeaf, raw: int) -> Number:
    """Raw wire integer -> engineering value.

    Scaled values are computed with IEEE double arithmetic (raw * scale +
    offset) so independent implementations reproduce them bit-exactly.
    """
    enc = leaf.encoding
    width = leaf.width_bits
    if enc.numeric_class == "ieee_float":
        fmt = ">f" if width == 32 else ">d"
        value = struct.unpack(fmt, raw.to_bytes(width // 8, "big"))[0]
        if enc.is_identity:
            return value
        return value * float(enc.scale) + float(enc.offset)
    if enc.numeric_class == "signed" and raw >= (1 << (width - 1)):
        signed = raw - (1 << width)
    else:
        signed = raw
    if enc.is_identity:
        return signed
    return float(signed) * float(enc.scale) + float(enc.offset)


def _payload_leaves(
    doc: ICDDocument, device_id: str, frame: FrameDef
) -> list[tuple[ContainerDef, str, ResolvedLeaf]]:
    out = []
    for container in frame.payload_containers:
        path = container.linked_parameter or ""
        leaf = resolve_parameter_path(doc, device_id, path)
        out.append((container, path, leaf))
    return out


def encode_frame(
    doc: ICDDocument, device_id: str, frame_name: str, values: Mapping[str, Number]
) -> Bitstream:
    """Encode a value map into the frame's bitstream.

    Requires a validator-clean document and a value for every payload leaf;
    keys not linked by the frame are ignored.
    """
    _, frame = find_frame(doc, device_id, frame_name)
    buf = bytearray((frame.size_bits + 7) // 8)
    for container in frame.id_containers:
        if container.width_bits is None:
            raise MissingWidth(container.name)
        value = container.value or 0
        if value < 0 or value >= (1 << container.width_bits):
            raise RangeExceeded(container.name, value, f"{container.width_bits}-bit constant")
        place_bits(buf, container.address, container.width_bits, value)
    for container, path, leaf in _payload_leaves(doc, device_id, frame):
        if path not in values:
            raise MissingValue(path)
        raw = encode_raw(leaf, values[path], path)
        raw = swap_if_little(raw, leaf.width_bits, leaf.encoding)
        place_bits(buf, container.address, leaf.width_bits, raw)
    return Bitstream(bit_length=frame.size_bits, data=bytes(buf))


def decode_frame(
    doc: ICDDocument, device_id: str, frame_name: str, bits: Bitstream
) -> dict[str, Number]:
    """Decode a bitstream back into engineering values.

    ID containers are checked against their declared constants; a mismatch
    signals frame mis-identification.  Bits outside all containers
    (including final-byte padding) are ignored.
    """
    _, frame = find_frame(doc, device_id, frame_name)
    if bits.bit_length != frame.size_bits:
        raise LengthMismatch(frame.size_bits, bits.bit_length)
    for container in frame.id_containers:
        if container.width_bits is None:
            raise MissingWidth(container.name)
        found = extract_bits(bits.data, container.address, container.width_bits)
        if found != (container.value or 0):
            raise IdMismatch(container.name, container.value or 0, found)
    values: dict[str, Number] = {}
    for container, path, leaf in _payload_leaves(doc, device_id, frame):
        raw = extract_bits(bits.data, container.address, leaf.width_bits)
        raw = swap_if_little(raw, leaf.width_bits, leaf.encoding)
        values[path] = decode_raw(leaf, raw)
    return values


# ---------------------------------------------------------------------------
# Golden vectors


class SplitMix64:
    """Deterministic 64-bit generator; constants fixed so independent
    implementations agree bit-exactly (see README)."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def draw_raw(rng: SplitMix64, leaf: ResolvedLeaf) -> int:
    """Uniform raw value: masked bits for integers; for floats, bit patterns
    redrawn until finite (exponent not all ones)."""
    enc = leaf.encoding
    width = leaf.width_bits
    if enc.numeric_class == "ieee_float":
        if width == 32:
            while True:
                pattern = rng.next_u64() & 0xFFFFFFFF
                if (pattern >> 23) & 0xFF != 0xFF:
                    return pattern
        while True:
            pattern = rng.next_u64()
            if (pattern >> 52) & 0x7FF != 0x7FF:
                return pattern
    return rng.next_u64() & ((1 << width) - 1)


def golden_vectors(
    doc: ICDDocument, device_id: str, frame_name: str, n: int, seed: int
) -> list[tuple[dict[str, Number], Bitstream]]:
    """Deterministic (value map, bitstream) pairs for conformance testing.

    Values are derived by decoding uniformly drawn raw patterns, so every
    vector round-trips exactly.  Draw order is payload containers by
    declaration order, one vector at a time.
    """
    _, frame = find_frame(doc, device_id, frame_name)
    leaves = _payload_leaves(doc, device_id, frame)
    rng = SplitMix64(seed)
    vectors = []
    for _ in range(n):
        values: dict[str, Number] = {}
        for _, path, leaf in leaves:
            # redraw patterns whose scaled engineering value is not finite
            # (large float raws can overflow once the scale is applied)
            while True:
                raw = draw_raw(rng, leaf)
                value = decode_raw(leaf, raw)
                if not isinstance(value, float) or math.isfinite(value):
                    break
            values[path] = value
        vectors.append((values, encode_frame(doc, device_id, frame_name, values)))
    return vectors


def format_number(value: Number) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_number(text: str) -> Number:
    stripped = text.strip()
    if stripped.lstrip("-").lower().startswith("0x"):
        return int(stripped, 16)
    if any(ch in stripped for ch in ".eE"):
        return float(stripped)
    return int(stripped)


def format_value_map(values: Mapping[str, Number]) -> str:
    return ";".join(f"{path}={format_number(values[path])}" for path in sorted(values))


def parse_value_map(text: str) -> dict[str, Number]:
    values: dict[str, Number] = {}
    text = text.strip()
    if not text:
        return values
    for pair in text.split(";"):
        path, _, raw = pair.partition("=")
        if not path or not raw:
            raise ValueError(f"malformed value pair {pair!r}")
        values[path.strip()] = parse_number(raw.strip())
    return values


def write_golden_file(
    device_id: str,
    frame: FrameDef,
    seed: int,
    vectors: Iterable[tuple[Mapping[str, Number], Bitstream]],
) -> str:
    """Golden-vector file: a header line, then `path=value;... | hex` lines."""
    lines = [f"#frame {device_id}/{frame.name} size {frame.size_bits} seed {seed}"]
    for values, bits in vectors:
        lines.append(f"{format_value_map(values)} | {bits.hex()}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GoldenFile:
    device_id: str
    frame_name: str
    size_bits: int
    seed: int
    vectors: tuple[tuple[dict[str, Number], Bitstream], ...]


def read_golden_file(text: str) -> GoldenFile:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("#frame "):
        raise ValueError("golden file must start with a '#frame' header")
    header = lines[0].split()
    if len(header) != 6 or header[2] != "size" or header[4] != "seed":
        raise ValueError(f"malformed golden header {lines[0]!r}")
    device_id, _, frame_name = header[1].partition("/")
    size_bits = int(header[3])
    seed = int(header[5])
    vectors = []
    for line in lines[1:]:
        left, sep, right = line.partition(" | ")
        if not sep:
            raise ValueError(f"malformed golden vector line {line!r}")
        vectors.append(
            (parse_value_map(left), Bitstream.from_hex(size_bits, right))
        )
    return GoldenFile(
        device_id=device_id,
        frame_name=frame_name,
        size_bits=size_bits,
        seed=seed,
        vectors=tuple(vectors),
    )

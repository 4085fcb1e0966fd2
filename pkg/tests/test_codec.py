from __future__ import annotations

import math
import random
import struct
from decimal import Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docgen import DocGen
from icdforge.codec import (
    Bitstream,
    IdMismatch,
    LengthMismatch,
    MissingValue,
    RangeExceeded,
    SplitMix64,
    _round_half_away,
    decode_frame,
    draw_raw,
    encode_frame,
    extract_bits,
    golden_vectors,
    parse_value_map,
    read_golden_file,
    write_golden_file,
)
from icdforge.model import find_frame, resolve_parameter_path
from icdforge.validate import validate
from icdforge.xmlio import parse_icd
from oracle_utils import naive_encode_frame, reference_round_half_away

PAYLOAD = "in.OCE_Cmds.ACTFXX.ACTFLO_Cmd_Pos_rad"


def ulp_diff(a: float, b: float) -> int:
    def ordered(x: float) -> int:
        bits = struct.unpack(">q", struct.pack(">d", x))[0]
        return bits if bits >= 0 else (1 << 63) - bits - (1 << 63) * 2 + (1 << 63)

    def key(x: float) -> int:
        bits = struct.unpack(">q", struct.pack(">d", x))[0]
        return bits if bits >= 0 else -(bits & ((1 << 63) - 1)) - 1

    return abs(key(a) - key(b))


def _mini_doc(leaf_type: str, extra_types: bytes = b"") -> tuple:
    data = (
        b'<root><Devices><Device name="d" id="D"><Functions>'
        b'<Function name="fn"><Parameters>'
        b'<Parameter name="p" direction="out" data_type="%s"/>'
        b"</Parameters></Function></Functions><Port_Contents>"
        b'<Port_Content name="pc" direction="out"><Frames>'
        b'<Frame name="f" size="96">'
        b'<IDs><Container name="ID" address="0" width="8" value="0x5A"/></IDs>'
        b'<Payload><Container name="P" address="16" linked_parameter="fn.p"/></Payload>'
        b"</Frame></Frames></Port_Content></Port_Contents></Device></Devices>"
        b"<DataTypes>%s</DataTypes></root>"
    ) % (leaf_type.encode(), extra_types)
    result = parse_icd(data)
    assert result.ok, [str(i) for i in result.issues]
    assert validate(result.document) == []
    return result.document


class TestEncodeFrame:
    def test_fccn_id_bits(self, fccn_doc):
        bits = encode_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", {PAYLOAD: 0.0})
        # 0x60A over bits 0..10 MSB-first is 11000001010; RTR bit 11 is 0
        assert extract_bits(bits.data, 0, 11) == 0x60A
        assert extract_bits(bits.data, 11, 1) == 0
        assert bits.data[0] == 0b11000001
        assert bits.data[1] == 0b01000000
        assert bits.bit_length == 83
        assert len(bits.data) == 11

    def test_zero_payload_region(self):
        doc = _mini_doc("uint8")
        bits = encode_frame(doc, "D", "f", {"fn.p": 0})
        assert extract_bits(bits.data, 8, 88) == 0  # everything after the ID

    def test_unoccupied_bits_zero(self, fccn_doc):
        bits = encode_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", {PAYLOAD: -1.0})
        assert extract_bits(bits.data, 12, 39) == 0  # gap between RTR and payload

    def test_missing_value(self, fccn_doc):
        with pytest.raises(MissingValue):
            encode_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", {})

    def test_extra_values_ignored(self, fccn_doc):
        bits = encode_frame(
            fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", {PAYLOAD: 1.0, "other.path": 3}
        )
        assert decode_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", bits)[PAYLOAD] == 1.0

    def test_range_errors(self):
        cases = [
            ("uint16", 65536),
            ("uint16", -1),
            ("int8", -129),
            ("int8", 128),
            ("bool", 2),
            ("float32", 1e39),
            ("float32", float("nan")),
            ("float32", float("inf")),
            ("uint8", 3.5),  # unscaled integer leaf needs an integral value
        ]
        for leaf_type, value in cases:
            doc = _mini_doc(leaf_type)
            with pytest.raises(RangeExceeded):
                encode_frame(doc, "D", "f", {"fn.p": value})

    def test_scaled_range_checked_after_inverse(self):
        doc = _mini_doc(
            "Cdeg",
            b'<DataType name="Cdeg" type="Atomic" size="16" data_type="int16" scale="0.01"/>',
        )
        assert decode_frame(doc, "D", "f", encode_frame(doc, "D", "f", {"fn.p": 327.67}))
        with pytest.raises(RangeExceeded):
            encode_frame(doc, "D", "f", {"fn.p": 327.68})


class TestDecodeFrame:
    def test_roundtrip_integers_exact(self):
        doc = _mini_doc("int32")
        for value in (-(2**31), -1, 0, 1, 2**31 - 1):
            bits = encode_frame(doc, "D", "f", {"fn.p": value})
            assert decode_frame(doc, "D", "f", bits) == {"fn.p": value}

    def test_id_mismatch_reports_constant(self, fccn_doc):
        bits = encode_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", {PAYLOAD: 1.0})
        corrupted = bytearray(bits.data)
        corrupted[0] ^= 0x80
        with pytest.raises(IdMismatch) as err:
            decode_frame(
                fccn_doc,
                "FCCN",
                "F_ACTFLO_Cmd_Pos",
                Bitstream(bit_length=83, data=bytes(corrupted)),
            )
        assert err.value.expected == 0x60A
        assert err.value.found == 0x60A ^ 0x400

    def test_length_mismatch(self, fccn_doc):
        with pytest.raises(LengthMismatch):
            decode_frame(
                fccn_doc,
                "FCCN",
                "F_ACTFLO_Cmd_Pos",
                Bitstream(bit_length=80, data=bytes(10)),
            )

    def test_scaled_float_decode_within_one_ulp(self):
        doc = _mini_doc(
            "Hundredth",
            b'<DataType name="Hundredth" type="Atomic" size="32" data_type="float32" scale="0.01"/>',
        )
        raw = struct.pack(">f", 123.0)
        frame_bits = bytearray(12)
        frame_bits[0] = 0x5A  # ID
        frame_bits[2:6] = raw
        values = decode_frame(doc, "D", "f", Bitstream(bit_length=96, data=bytes(frame_bits)))
        exact = float(Decimal(123) * Decimal("0.01"))
        assert ulp_diff(values["fn.p"], exact) <= 1

    def test_disjointness_bits_outside_containers(self, fccn_doc, mixed_doc):
        rng = random.Random(5)
        for doc, device, frame_name in (
            (fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos"),
            (mixed_doc, "IOC", "F_MIX1"),
        ):
            _, frame = find_frame(doc, device, frame_name)
            occupied = set()
            for c in frame.id_containers:
                occupied.update(range(c.address, c.address + c.width_bits))
            for c in frame.payload_containers:
                leaf = resolve_parameter_path(doc, device, c.linked_parameter)
                occupied.update(range(c.address, c.address + leaf.width_bits))
            padded = 8 * ((frame.size_bits + 7) // 8)
            free = [b for b in range(padded) if b not in occupied]
            (values, bits) = golden_vectors(doc, device, frame_name, 1, 77)[0]
            for position in free:
                flipped = bytearray(bits.data)
                flipped[position // 8] ^= 1 << (7 - position % 8)
                got = decode_frame(
                    doc, device, frame_name, Bitstream(frame.size_bits, bytes(flipped))
                )
                assert got == values, f"bit {position} leaked into decode"


class TestNaiveOracleEquivalence:
    def test_fixture_frames(self, fccn_doc, mixed_doc):
        cases = [(fccn_doc, "FCCN"), (mixed_doc, "IOC"), (mixed_doc, "RIU")]
        for doc, device in cases:
            for pc in doc.device(device).port_contents:
                for frame in pc.frames:
                    for values, bits in golden_vectors(doc, device, frame.name, 100, 3):
                        naive = naive_encode_frame(doc, device, frame.name, values)
                        assert naive == bits.data, (device, frame.name, values)

    def test_randomized_documents(self):
        rng = random.Random(616)
        cases = 0
        while cases < 2000:
            doc = DocGen(rng).document(clean=True)
            assert validate(doc) == []
            for device in doc.devices:
                for pc in device.port_contents:
                    for frame in pc.frames:
                        vectors = golden_vectors(
                            doc, device.id, frame.name, 4, rng.randrange(2**63)
                        )
                        for values, bits in vectors:
                            naive = naive_encode_frame(doc, device.id, frame.name, values)
                            assert naive == bits.data
                            assert (
                                decode_frame(doc, device.id, frame.name, bits) == values
                            )
                            cases += 1


class TestLittleEndian:
    def test_byte_sequence_reversed(self, mixed_doc):
        # P_cnt at bit 112 is byte-aligned: U24_le value 0x010203 must be
        # transmitted 03 02 01
        values, _ = golden_vectors(mixed_doc, "IOC", "F_MIX2", 1, 9)[0]
        values["out.Env_Data.count_le"] = 0x010203
        bits = encode_frame(mixed_doc, "IOC", "F_MIX2", values)
        assert bits.data[14:17] == bytes([0x03, 0x02, 0x01])
        assert decode_frame(mixed_doc, "IOC", "F_MIX2", bits)["out.Env_Data.count_le"] == 0x010203


class TestRounding:
    def test_half_away_fixed_points(self):
        assert _round_half_away(Fraction(5, 2)) == 3
        assert _round_half_away(Fraction(-5, 2)) == -3
        assert _round_half_away(Fraction(1, 2)) == 1
        assert _round_half_away(Fraction(-1, 2)) == -1
        assert _round_half_away(Fraction(2, 5)) == 0

    @given(st.fractions(min_value=-10**9, max_value=10**9, max_denominator=10**6))
    @settings(max_examples=300, deadline=None)
    def test_half_away_matches_decimal_oracle(self, q: Fraction):
        assert _round_half_away(q) == reference_round_half_away(q)


class TestGoldenVectors:
    def test_splitmix_reference_outputs(self):
        # published SplitMix64 test vector (seed 0)
        rng = SplitMix64(0)
        assert [rng.next_u64() for _ in range(3)] == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_deterministic_per_seed(self, fccn_doc):
        frame = find_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos")[1]
        first = write_golden_file(
            "FCCN", frame, 7, golden_vectors(fccn_doc, "FCCN", frame.name, 50, 7)
        )
        second = write_golden_file(
            "FCCN", frame, 7, golden_vectors(fccn_doc, "FCCN", frame.name, 50, 7)
        )
        assert first == second
        different = write_golden_file(
            "FCCN", frame, 8, golden_vectors(fccn_doc, "FCCN", frame.name, 50, 8)
        )
        assert different != first

    def test_id_bits_constant_across_vectors(self, fccn_doc):
        for _, bits in golden_vectors(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos", 200, 11):
            assert extract_bits(bits.data, 0, 11) == 0x60A
            assert extract_bits(bits.data, 11, 1) == 0

    def test_all_vectors_roundtrip(self, mixed_doc):
        for frame_name in ("F_MIX1", "F_MIX2", "F_NAV", "F_STAT"):
            for values, bits in golden_vectors(mixed_doc, "IOC", frame_name, 100, 23):
                assert decode_frame(mixed_doc, "IOC", frame_name, bits) == values

    def test_floats_always_finite(self, mixed_doc):
        for values, _ in golden_vectors(mixed_doc, "IOC", "F_NAV", 300, 5):
            for value in values.values():
                if isinstance(value, float):
                    assert math.isfinite(value)

    def test_file_roundtrip(self, mixed_doc):
        frame = find_frame(mixed_doc, "IOC", "F_MIX2")[1]
        vectors = golden_vectors(mixed_doc, "IOC", "F_MIX2", 25, 99)
        text = write_golden_file("IOC", frame, 99, vectors)
        parsed = read_golden_file(text)
        assert parsed.device_id == "IOC"
        assert parsed.frame_name == "F_MIX2"
        assert parsed.size_bits == frame.size_bits
        assert parsed.seed == 99
        assert parsed.vectors == tuple(vectors)

    def test_value_map_syntax(self):
        values = parse_value_map("a.b=1;c.d=-2.5;e.f=0x10")
        assert values == {"a.b": 1, "c.d": -2.5, "e.f": 16}
        with pytest.raises(ValueError):
            parse_value_map("nonsense")

    def test_draw_raw_masks_width(self, mixed_doc):
        leaf = resolve_parameter_path(mixed_doc, "IOC", "out.Surf_Cmds.trim")
        rng = SplitMix64(3)
        for _ in range(200):
            assert 0 <= draw_raw(rng, leaf) < (1 << 12)

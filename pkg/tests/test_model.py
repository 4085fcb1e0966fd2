from __future__ import annotations

import random

import pytest

from docgen import DocGen
from icdforge.model import (
    BUILTIN_TYPES,
    CyclicType,
    MissingWidth,
    NonAtomicLeaf,
    ParameterPath,
    UnknownDevice,
    UnknownSegment,
    UnknownType,
    container_width,
    effective_encoding,
    find_frame,
    flatten_type,
    iter_leaf_paths,
    resolve_parameter_path,
    type_bit_width,
)
from icdforge.validate import validate
from icdforge.xmlio import parse_icd, serialize_icd
from oracle_utils import naive_flatten

ATOMIC_ACTFXX = b"""<root>
 <Devices>
  <Device name="Variant" id="FCCN">
   <Functions>
    <Function name="in">
     <Parameters>
      <Parameter name="OCE_Cmds" direction="out" data_type="DCE_Cmds"/>
     </Parameters>
    </Function>
   </Functions>
  </Device>
 </Devices>
 <DataTypes>
  <DataType name="DCE_Cmds" type="Complex" size="384">
   <Elements>
    <Element name="ESCXX" address="0" data_type="float32"/>
    <Element name="ACTFXX" address="96" data_type="float32"/>
   </Elements>
  </DataType>
 </DataTypes>
</root>
"""

NESTED = b"""<root>
 <Devices>
  <Device name="Nested" id="N1">
   <Functions>
    <Function name="fn">
     <Parameters>
      <Parameter name="p" direction="out" data_type="L0"/>
     </Parameters>
    </Function>
   </Functions>
  </Device>
 </Devices>
 <DataTypes>
  <DataType name="L0" type="Complex" size="256">
   <Elements>
    <Element name="head" address="0" data_type="uint32"/>
    <Element name="mid" address="96" data_type="L1"/>
   </Elements>
  </DataType>
  <DataType name="L1" type="Complex" size="128">
   <Elements>
    <Element name="pad" address="0" data_type="uint32"/>
    <Element name="leaf" address="32" data_type="float64"/>
   </Elements>
  </DataType>
 </DataTypes>
</root>
"""


def _doc(data: bytes):
    result = parse_icd(data)
    assert result.ok, [str(i) for i in result.issues]
    return result.document


class TestResolveParameterPath:
    def test_fccn_element_offset(self, fccn_doc):
        leaf = resolve_parameter_path(
            fccn_doc, "FCCN", "in.OCE_Cmds.ACTFXX.ACTFLO_Cmd_Pos_rad"
        )
        assert leaf.cumulative_bit_offset == 96
        assert leaf.type_name == "float32"
        assert leaf.width_bits == 32

    def test_atomic_element_at_96(self):
        # the ACTFXX element itself resolves when the fixture gives it an
        # atomic type; its address comes straight from the document
        doc = _doc(ATOMIC_ACTFXX)
        leaf = resolve_parameter_path(doc, "FCCN", "in.OCE_Cmds.ACTFXX")
        assert leaf.cumulative_bit_offset == 96
        assert leaf.type_name == "float32"

    def test_first_element_has_zero_offset(self, fccn_doc):
        leaf = resolve_parameter_path(fccn_doc, "FCCN", "in.OCE_Cmds.ESCXX.ESC1_Cmd_rpm")
        assert leaf.cumulative_bit_offset == 0

    def test_nested_offsets_sum(self):
        # element at 96 containing a sub-element at 32 lands at 128
        doc = _doc(NESTED)
        leaf = resolve_parameter_path(doc, "N1", "fn.p.mid.leaf")
        assert leaf.cumulative_bit_offset == 96 + 32 == 128
        rows = {
            ".".join(path): offset for path, offset, _, _ in naive_flatten(doc, "L0")
        }
        assert rows["mid.leaf"] == 128

    def test_unknown_device(self, fccn_doc):
        with pytest.raises(UnknownDevice):
            resolve_parameter_path(fccn_doc, "NOPE", "in.OCE_Cmds")

    def test_unknown_segments_carry_position(self, fccn_doc):
        with pytest.raises(UnknownSegment) as err:
            resolve_parameter_path(fccn_doc, "FCCN", "nofn.OCE_Cmds")
        assert err.value.position == 0
        with pytest.raises(UnknownSegment) as err:
            resolve_parameter_path(fccn_doc, "FCCN", "in.nope")
        assert err.value.position == 1
        with pytest.raises(UnknownSegment) as err:
            resolve_parameter_path(fccn_doc, "FCCN", "in.OCE_Cmds.MISSING.x")
        assert err.value.position == 2

    def test_non_atomic_leaf(self, fccn_doc):
        with pytest.raises(NonAtomicLeaf):
            resolve_parameter_path(fccn_doc, "FCCN", "in.OCE_Cmds.ACTFXX")
        with pytest.raises(NonAtomicLeaf):
            resolve_parameter_path(fccn_doc, "FCCN", "in.OCE_Cmds")

    def test_segment_below_atomic_is_unknown(self, fccn_doc):
        with pytest.raises(UnknownSegment):
            resolve_parameter_path(
                fccn_doc, "FCCN", "in.OCE_Cmds.ACTFXX.ACTFLO_Cmd_Pos_rad.deeper"
            )

    def test_parameter_path_needs_two_segments(self):
        with pytest.raises(ValueError):
            ParameterPath(device_id="X", segments=("only",))
        path = ParameterPath.from_dotted("FCCN", "in.OCE_Cmds")
        assert path.segments == ("in", "OCE_Cmds")
        assert path.dotted == "in.OCE_Cmds"


class TestTypeBitWidth:
    def test_fccn_complex_declared(self, fccn_doc):
        width = type_bit_width(fccn_doc, "DCE_Cmds")
        assert width.declared_bits == 384
        assert width.computed_min_bits == 384  # elements pack the type exactly

    def test_builtin(self, fccn_doc):
        assert type_bit_width(fccn_doc, "float32").declared_bits == 32

    def test_computed_minimum(self):
        doc = _doc(
            b"""<root><Devices/><DataTypes>
             <DataType name="Pad" type="Complex" size="512">
              <Elements>
               <Element name="a" address="0" data_type="uint32"/>
               <Element name="b" address="96" data_type="uint64"/>
              </Elements>
             </DataType>
            </DataTypes></root>"""
        )
        width = type_bit_width(doc, "Pad")
        assert width.declared_bits == 512
        assert width.computed_min_bits == max(0 + 32, 96 + 64) == 160

    def test_unknown_type(self, fccn_doc):
        with pytest.raises(UnknownType):
            type_bit_width(fccn_doc, "Nope")


class TestContainerWidth:
    def test_declared_id_width(self, fccn_doc):
        frame = find_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos")[1]
        device = fccn_doc.device("FCCN")
        assert container_width(fccn_doc, device, frame.id_containers[0]) == 11

    def test_payload_width_from_leaf(self, fccn_doc):
        frame = find_frame(fccn_doc, "FCCN", "F_ACTFLO_Cmd_Pos")[1]
        assert container_width(fccn_doc, "FCCN", frame.payload_containers[0]) == 32

    def test_nested_payload_width_matches_flatten(self, mixed_doc):
        frame = find_frame(mixed_doc, "IOC", "F_NAV")[1]
        widths = {
            ".".join(("out", "Nav_Out", *path)): width
            for path, _, _, width in naive_flatten(mixed_doc, "DNAV")
        }
        for container in frame.payload_containers:
            got = container_width(mixed_doc, "IOC", container)
            assert got == widths[container.linked_parameter]

    def test_constant_without_width(self, fccn_doc):
        from icdforge.model import ContainerDef

        with pytest.raises(MissingWidth):
            container_width(
                fccn_doc, "FCCN", ContainerDef(name="x", address=0, value=1)
            )


class TestEncodingChain:
    def test_overrides_accumulate(self, mixed_doc):
        temp = mixed_doc.find_type("Temp_c")
        enc = effective_encoding(mixed_doc, temp)
        assert enc.numeric_class == "ieee_float"
        assert float(enc.scale) == 0.5
        assert float(enc.offset) == -40.0

    def test_little_endian_declared(self, mixed_doc):
        enc = effective_encoding(mixed_doc, mixed_doc.find_type("U24_le"))
        assert enc.byte_order == "little"
        assert enc.numeric_class == "unsigned"

    def test_builtins_identity(self, fccn_doc):
        enc = effective_encoding(fccn_doc, BUILTIN_TYPES["int16"])
        assert enc.is_identity and enc.byte_order == "big"

    def test_chained_declared_atomics_inherit_overrides(self):
        result = parse_icd(
            b"""<root><Devices/><DataTypes>
             <DataType name="A" type="Atomic" size="12" data_type="int16"/>
             <DataType name="B" type="Atomic" data_type="A" scale="0.5"/>
             <DataType name="LeBase" type="Atomic" size="24" data_type="uint32" byte_order="little"/>
             <DataType name="LeChild" type="Atomic" data_type="LeBase"/>
            </DataTypes></root>"""
        )
        doc = result.document
        assert doc is not None, [str(i) for i in result.issues]
        b = doc.find_type("B")
        assert b.size_bits == 12  # inherited from A, not from int16
        enc = effective_encoding(doc, b)
        assert enc.numeric_class == "signed"
        assert float(enc.scale) == 0.5
        child = doc.find_type("LeChild")
        assert child.size_bits == 24
        assert effective_encoding(doc, child).byte_order == "little"

    def test_intermediate_little_override_checked_for_alignment(self):
        # LeChild resizes to an odd width while inheriting little byte order
        result = parse_icd(
            b"""<root><Devices/><DataTypes>
             <DataType name="LeBase" type="Atomic" size="24" data_type="uint32" byte_order="little"/>
             <DataType name="LeChild" type="Atomic" size="12" data_type="LeBase"/>
            </DataTypes></root>"""
        )
        assert not result.ok
        assert any("multiple of 8" in issue.message for issue in result.errors)

    def test_cycles_detected(self):
        result = parse_icd(
            b"""<root><Devices/><DataTypes>
             <DataType name="A" type="Atomic" size="8" data_type="B"/>
             <DataType name="B" type="Atomic" size="8" data_type="A"/>
            </DataTypes></root>"""
        )
        doc = result.document
        assert doc is not None
        with pytest.raises(CyclicType):
            effective_encoding(doc, doc.find_type("A"))


class TestDocumentProperties:
    def test_flatten_matches_naive_on_random_docs(self):
        rng = random.Random(2024)
        for _ in range(40):
            doc = DocGen(rng).document(clean=True)
            for tdef in doc.data_types:
                if tdef.kind != "complex":
                    continue
                got = [
                    (".".join(path), offset, leaf.name, leaf.size_bits)
                    for path, offset, leaf in flatten_type(doc, tdef.name)
                ]
                want = [
                    (".".join(path), offset, name, width)
                    for path, offset, name, width in naive_flatten(doc, tdef.name)
                ]
                assert got == want

    def test_leaf_enumeration_total_on_clean_docs(self):
        rng = random.Random(7)
        for _ in range(30):
            doc = DocGen(rng).document(clean=True)
            assert validate(doc) == []
            for device in doc.devices:
                for path, leaf in iter_leaf_paths(doc, device.id):
                    resolved = resolve_parameter_path(doc, device.id, path)
                    assert resolved == leaf

    def test_container_width_sum_within_frame(self):
        rng = random.Random(99)
        for _ in range(30):
            doc = DocGen(rng).document(clean=True)
            assert validate(doc) == []
            for device in doc.devices:
                for pc in device.port_contents:
                    for frame in pc.frames:
                        total = sum(
                            container_width(doc, device, c) for c in frame.containers
                        )
                        assert total <= frame.size_bits

    def test_uniqueness_survives_roundtrip(self):
        rng = random.Random(55)
        for _ in range(10):
            doc = DocGen(rng).document(clean=True)
            again = parse_icd(serialize_icd(doc)).document
            assert again == doc

import dataclasses
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from factories import hand_bitstream, random_merge_instance
from subpicpack.errors import (CtuMismatch, DimensionMismatch, EmptyInput, FrameCountMismatch, IdCollision,
                               IdWidthMismatch, Malformed, PlanGeometryMismatch, UnknownSubpicId)
from subpicpack.layout import RegionKind, RegionSpec, plan_packing
from subpicpack.nal_hls import (NalType, SeiMessage, SliceType, SliceUnit, encode_slice,
                                frame_bitstream, parse_bitstream)
from subpicpack.subpic_tools import CodedBitstream, extract_decoded_region, merge, split
from subpicpack.yuv import YuvFrame


def two_region_plan(ctu=64):
    return plan_packing([RegionSpec(RegionKind.TEXTURE, 2 * ctu, ctu, 0),
                         RegionSpec(RegionKind.GEOMETRY, ctu, ctu, 1)], ctu)


def inputs_for(plan, frames=3, id_len=4, seed=0, intra=2):
    rng = random.Random(seed)
    return [hand_bitstream(rng, p.subpic_id, p.ctu_w, p.ctu_h, plan.ctu_size, frames, id_len, intra)
            for p in plan.placements]


class TestSerialization:
    def test_parameter_sets_repeat_at_irap(self):
        b = inputs_for(two_region_plan(), frames=5, intra=2)[0]
        types = [u.nal_type for u in b.iter_units()]
        assert types == [NalType.SPS, NalType.PPS, NalType.IDR, NalType.TRAIL,
                         NalType.SPS, NalType.PPS, NalType.IDR, NalType.TRAIL,
                         NalType.SPS, NalType.PPS, NalType.IDR]

    def test_round_trip(self):
        b = inputs_for(two_region_plan(), frames=6)[1]
        again = CodedBitstream.from_bytes(b.to_bytes())
        assert again.to_bytes() == b.to_bytes()
        assert again.frame_count == 6

    def test_slice_before_sps(self):
        b = inputs_for(two_region_plan())[0]
        units = list(b.iter_units())
        with pytest.raises(Malformed):
            CodedBitstream.from_units(units[2:])

    def test_changing_sps_rejected(self):
        plan = two_region_plan()
        a, b = inputs_for(plan, frames=1)
        units = list(a.iter_units()) + list(b.iter_units())
        with pytest.raises(Malformed):
            CodedBitstream.from_units(units)

    def test_parameter_set_bytes(self):
        b = inputs_for(two_region_plan())[0]
        assert b.parameter_set_bytes() == len(frame_bitstream(b.parameter_units()))


class TestMergeSplit:
    def test_split_is_byte_identical(self):
        plan = two_region_plan()
        inputs = inputs_for(plan)
        merged = merge(inputs, plan)
        parsed = CodedBitstream.from_bytes(merged.to_bytes())
        for b in inputs:
            assert split(parsed, b.subpic_id).to_bytes() == b.to_bytes()

    def test_merged_layout(self):
        plan = two_region_plan()
        merged = merge(inputs_for(plan), plan)
        assert (merged.sps.pic_width_luma, merged.sps.pic_height_luma) == (plan.composite_w, plan.composite_h)
        assert merged.sps.subpic_ids == [p.subpic_id for p in plan.placements]
        assert all(len(au.slices) == 2 for au in merged.access_units)

    def test_slices_are_not_rewritten(self):
        plan = two_region_plan()
        inputs = inputs_for(plan)
        merged = merge(inputs, plan)
        originals = {id(n): n for b in inputs for au in b.access_units for n in au.slices}
        for au in merged.access_units:
            for n in au.slices:
                assert originals[id(n)] is n

    def test_sei_travels_with_merge(self):
        plan = two_region_plan()
        sei = [SeiMessage(100, b"\x01\x02")]
        merged = merge(inputs_for(plan), plan, sei)
        assert CodedBitstream.from_bytes(merged.to_bytes()).sei == sei

    @given(st.integers(0, 2**32 - 1))
    def test_random_instances_round_trip(self, seed):
        inputs, plan = random_merge_instance(random.Random(seed))
        data = merge(inputs, plan).to_bytes()
        parsed = CodedBitstream.from_bytes(data)
        assert parsed.to_bytes() == data
        for b in inputs:
            assert split(parsed, b.subpic_id).to_bytes() == b.to_bytes()


class TestMergeErrors:
    def test_empty(self):
        with pytest.raises(EmptyInput):
            merge([], two_region_plan())

    def test_ctu_mismatch(self):
        plan = two_region_plan(64)
        with pytest.raises(CtuMismatch):
            merge(inputs_for(two_region_plan(32)), plan)

    def test_id_width_mismatch(self):
        plan = two_region_plan()
        a = inputs_for(plan, id_len=4)[0]
        b = inputs_for(plan, id_len=5)[1]
        with pytest.raises(IdWidthMismatch):
            merge([a, b], plan)

    def test_frame_count_mismatch(self):
        plan = two_region_plan()
        a = inputs_for(plan, frames=3)[0]
        b = inputs_for(plan, frames=4)[1]
        with pytest.raises(FrameCountMismatch):
            merge([a, b], plan)

    def test_id_collision(self):
        plan = two_region_plan()
        a = inputs_for(plan)[0]
        with pytest.raises(IdCollision):
            merge([a, a], plan)

    def test_plan_ids_differ(self):
        plan = two_region_plan()
        with pytest.raises(PlanGeometryMismatch):
            merge(inputs_for(plan)[:1], plan)

    def test_wrong_size(self):
        plan = two_region_plan()
        a, b = inputs_for(plan)
        p0, p1 = plan.placements
        swapped = dataclasses.replace(plan, placements=(dataclasses.replace(p0, subpic_id=p1.subpic_id),
                                                        dataclasses.replace(p1, subpic_id=p0.subpic_id)))
        with pytest.raises(PlanGeometryMismatch):
            merge([a, b], swapped)

    def test_split_unknown(self):
        plan = two_region_plan()
        with pytest.raises(UnknownSubpicId):
            split(merge(inputs_for(plan), plan), 7)

    def test_stray_slice_rejected(self):
        plan = two_region_plan()
        b = inputs_for(plan)[0]
        foreign = encode_slice(SliceUnit(1, SliceType.P, b"\x00"), b.sps)
        b.access_units[1].slices.append(foreign)
        with pytest.raises(UnknownSubpicId):
            merge([b, inputs_for(plan)[1]], plan)


class TestExtract:
    def test_crop(self):
        plan = two_region_plan(32)
        merged = merge(inputs_for(plan), plan)
        frame = YuvFrame.filled(96, 32, 0)
        frame.paste(YuvFrame.filled(32, 32, 200), 64, 0)
        region = extract_decoded_region(frame, merged.sps, plan.placement(1).subpic_id)
        assert region == YuvFrame.filled(32, 32, 200)

    def test_unknown_id(self):
        plan = two_region_plan(32)
        merged = merge(inputs_for(plan), plan)
        with pytest.raises(UnknownSubpicId):
            extract_decoded_region(YuvFrame.filled(96, 32, 0), merged.sps, 9)


def test_parse_survives_adversarial_payloads():
    plan = two_region_plan()
    inputs = inputs_for(plan, frames=17, seed=5)
    data = merge(inputs, plan).to_bytes()
    assert frame_bitstream(parse_bitstream(data)) == data


class TestMergeProperties:
    def test_paper_sized_pair(self):
        plan = plan_packing([RegionSpec(RegionKind.TEXTURE, 2048, 1280, 0),
                             RegionSpec(RegionKind.GEOMETRY, 2048, 640, 1)], 128)
        merged = merge(inputs_for(plan, frames=2), plan)
        assert (merged.sps.pic_width_luma, merged.sps.pic_height_luma) == (2048, 1920)
        rects = [(e.ctu_x, e.ctu_y, e.ctu_w, e.ctu_h) for e in merged.sps.subpics]
        assert rects == [(0, 0, 16, 10), (0, 10, 16, 5)]

    def test_single_input_identity(self):
        plan = plan_packing([RegionSpec(RegionKind.TEXTURE, 200, 90, 0)], 64)
        (only,) = inputs_for(plan, frames=4)
        assert merge([only], plan).to_bytes() == only.to_bytes()

    def test_three_way_split_takes_a_third(self):
        ctu = 32
        plan = plan_packing([RegionSpec(RegionKind.TEXTURE, ctu, ctu, i) for i in range(3)], ctu)
        assert plan.fillers() == []
        merged = CodedBitstream.from_bytes(merge(inputs_for(plan, frames=7), plan).to_bytes())
        total = sum(len(au.slices) for au in merged.access_units)
        for p in plan.placements:
            part = split(merged, p.subpic_id)
            assert 3 * sum(len(au.slices) for au in part.access_units) == total

    @given(st.integers(0, 2**32 - 1))
    def test_vcl_bytes_conserved(self, seed):
        inputs, plan = random_merge_instance(random.Random(seed))
        merged = merge(inputs, plan)
        assert merged.vcl_payload_bytes() == sum(b.vcl_payload_bytes() for b in inputs)

    def test_mixed_nal_types_preserved(self):
        plan = two_region_plan()
        rng = random.Random(3)
        a, b = (hand_bitstream(rng, p.subpic_id, p.ctu_w, p.ctu_h, plan.ctu_size, 6, 4, period)
                for p, period in zip(plan.placements, (2, 3)))
        merged = CodedBitstream.from_bytes(merge([a, b], plan).to_bytes())
        seen = set()
        for au, au_a, au_b in zip(merged.access_units, a.access_units, b.access_units):
            types = sorted(n.nal_type for n in au.slices)
            assert types == sorted([au_a.slices[0].nal_type, au_b.slices[0].nal_type])
            seen.add(tuple(types))
        assert any(set(t) == {NalType.IDR, NalType.TRAIL} for t in seen)


class TestExtractGeometry:
    def test_bottom_region_rows(self):
        plan = plan_packing([RegionSpec(RegionKind.TEXTURE, 2048, 1280, 0),
                             RegionSpec(RegionKind.GEOMETRY, 2048, 640, 1)], 128)
        merged = merge(inputs_for(plan, frames=1), plan)
        frame = YuvFrame.filled(2048, 1920, 0)
        frame.y[:] = (np.arange(1920, dtype=np.uint32)[:, None] % 251).astype(frame.y.dtype)
        crop = extract_decoded_region(frame, merged.sps, plan.placement(1).subpic_id)
        assert crop.size == (2048, 640)
        assert np.array_equal(crop.y, frame.y[1280:1920])

    def test_full_frame_identity(self):
        plan = plan_packing([RegionSpec(RegionKind.TEXTURE, 64, 32, 0)], 32)
        merged = merge(inputs_for(plan, frames=1), plan)
        frame = YuvFrame.filled(64, 32, 17)
        frame.y[3, 5] = 99
        assert extract_decoded_region(frame, merged.sps, plan.placements[0].subpic_id) == frame

    def test_wrong_height(self):
        plan = two_region_plan(32)
        merged = merge(inputs_for(plan), plan)
        with pytest.raises(DimensionMismatch):
            extract_decoded_region(YuvFrame.filled(96, 64, 0), merged.sps, 0)

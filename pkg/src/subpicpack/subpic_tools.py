"""Merging single-subpicture bitstreams into one picture and splitting them
back out.

Slice NAL units are moved, never rewritten: each slice names its subpicture
in the first header field, so only parameter sets change.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (CtuMismatch, DimensionMismatch, EmptyInput, FrameCountMismatch, IdCollision,
                     IdWidthMismatch, Malformed, PlanGeometryMismatch, UnknownSubpicId)
from .layout import PlacementPlan
from .nal_hls import (NalType, NalUnit, PictureParams, SeiMessage, SequenceParams, SubpicEntry,
                      decode_pps, decode_sei, decode_slice, decode_sps, encode_pps, encode_sei,
                      encode_sps, frame_bitstream, parse_bitstream, slice_subpic_id)
from .yuv import YuvFrame


@dataclass
class AccessUnit:
    frame_index: int
    slices: list[NalUnit] = field(default_factory=list)

    @property
    def is_irap(self) -> bool:
        return any(n.nal_type.is_irap for n in self.slices)


@dataclass
class CodedBitstream:
    """Parameter sets plus frame-aligned slice NAL units.

    Serialization repeats SPS, PPS and SEI in the first access unit and in
    every access unit that carries an IRAP slice.
    """

    sps: SequenceParams
    access_units: list[AccessUnit] = field(default_factory=list)
    pps_id: int = 0
    sei: list[SeiMessage] = field(default_factory=list)

    @property
    def frame_count(self) -> int:
        return len(self.access_units)

    def parameter_units(self) -> list[NalUnit]:
        units = [encode_sps(self.sps), encode_pps(PictureParams(self.pps_id, self.sps.sps_id))]
        return units + [encode_sei(m) for m in self.sei]

    def iter_units(self):
        params = self.parameter_units()
        for i, au in enumerate(self.access_units):
            if i == 0 or au.is_irap:
                yield from params
            yield from au.slices

    def to_bytes(self) -> bytes:
        return frame_bitstream(self.iter_units())

    def slices_for(self, subpic_id: int):
        id_len = self.sps.subpic_id_len
        for au in self.access_units:
            for nal in au.slices:
                if slice_subpic_id(nal, id_len) == subpic_id:
                    yield au.frame_index, nal

    def slice_payloads(self, subpic_id: int | None = None) -> list[bytes]:
        out = []
        for au in self.access_units:
            for nal in au.slices:
                s = decode_slice(nal, self.sps)
                if subpic_id is None or s.subpic_id == subpic_id:
                    out.append(s.payload)
        return out

    def vcl_payload_bytes(self) -> int:
        return sum(len(p) for p in self.slice_payloads())

    def parameter_set_bytes(self) -> int:
        """Framed size of one round of SPS, PPS and SEI units."""
        return len(frame_bitstream(self.parameter_units()))

    @classmethod
    def from_units(cls, units) -> "CodedBitstream":
        sps = pps = None
        sei: list[SeiMessage] = []
        group_sei: list[SeiMessage] | None = None
        access_units: list[AccessUnit] = []
        current: AccessUnit | None = None
        seen_ids: set[int] = set()
        for nal in units:
            if not nal.is_vcl:
                if current is not None and current.slices:
                    current = None
                if nal.nal_type == NalType.SPS:
                    new = decode_sps(nal)
                    if sps is not None and new != sps:
                        raise Malformed("SPS changes mid-stream")
                    sps = new
                    group_sei = []
                elif nal.nal_type == NalType.PPS:
                    new = decode_pps(nal)
                    if pps is not None and new != pps:
                        raise Malformed("PPS changes mid-stream")
                    pps = new
                else:
                    if group_sei is None:
                        raise Malformed("SEI outside a parameter set group")
                    group_sei.append(decode_sei(nal))
                continue
            if sps is None or pps is None:
                raise Malformed("slice before SPS and PPS")
            if group_sei is not None:
                if access_units and group_sei != sei:
                    raise Malformed("SEI content changes mid-stream")
                sei = group_sei
                group_sei = None
            sid = slice_subpic_id(nal, sps.subpic_id_len)
            if sid not in sps.subpic_ids:
                raise UnknownSubpicId(f"slice names subpic_id {sid}, absent from SPS")
            if current is None or sid in seen_ids:
                current = AccessUnit(len(access_units))
                access_units.append(current)
                seen_ids = set()
            seen_ids.add(sid)
            current.slices.append(nal)
        if sps is None or pps is None:
            raise Malformed("stream has no SPS/PPS")
        if pps.sps_id != sps.sps_id:
            raise Malformed(f"PPS refers to SPS {pps.sps_id}, stream has SPS {sps.sps_id}")
        return cls(sps, access_units, pps.pps_id, sei)

    @classmethod
    def from_bytes(cls, data: bytes) -> "CodedBitstream":
        return cls.from_units(parse_bitstream(data))


class SubBitstream(CodedBitstream):
    """A bitstream holding exactly one subpicture."""

    @property
    def subpic_id(self) -> int:
        return self.sps.subpics[0].subpic_id

    def validate(self) -> None:
        if len(self.sps.subpics) != 1:
            raise PlanGeometryMismatch(f"sub-bitstream has {len(self.sps.subpics)} subpictures")
        for _, nal in self.slices_for_all():
            sid = slice_subpic_id(nal, self.sps.subpic_id_len)
            if sid != self.subpic_id:
                raise UnknownSubpicId(f"slice for subpic {sid} in sub-bitstream {self.subpic_id}")

    def slices_for_all(self):
        for au in self.access_units:
            for nal in au.slices:
                yield au.frame_index, nal


class MergedBitstream(CodedBitstream):
    """A bitstream whose pictures are composed of several subpictures."""


def merge(inputs, plan: PlacementPlan, sei=()) -> MergedBitstream:
    """Combine single-subpicture bitstreams into the composite described by
    ``plan``.  Inputs are matched to placements by subpicture id."""
    inputs = [SubBitstream(b.sps, b.access_units, b.pps_id, list(b.sei)) for b in inputs]
    if not inputs:
        raise EmptyInput("merge needs at least one input")
    for b in inputs:
        b.validate()
    first = inputs[0].sps
    for b in inputs:
        if b.sps.ctu_size != first.ctu_size or b.sps.ctu_size != plan.ctu_size:
            raise CtuMismatch(f"CTU sizes differ: {b.sps.ctu_size} vs {first.ctu_size} "
                              f"(plan {plan.ctu_size})")
        if b.sps.subpic_id_len != first.subpic_id_len:
            raise IdWidthMismatch(f"subpic_id_len {b.sps.subpic_id_len} vs {first.subpic_id_len}")
        if b.frame_count != inputs[0].frame_count:
            raise FrameCountMismatch(f"{b.frame_count} frames vs {inputs[0].frame_count}")
    by_id: dict[int, SubBitstream] = {}
    for b in inputs:
        if b.subpic_id in by_id:
            raise IdCollision(f"two inputs use subpic_id {b.subpic_id}")
        by_id[b.subpic_id] = b

    plan_ids = [p.subpic_id for p in plan.placements]
    if sorted(plan_ids) != sorted(by_id):
        raise PlanGeometryMismatch(f"plan subpictures {sorted(plan_ids)} vs inputs {sorted(by_id)}")
    entries = []
    for p in plan.placements:
        b = by_id[p.subpic_id]
        ctu = b.sps.ctu_size
        if b.sps.pic_width_luma % ctu or b.sps.pic_height_luma % ctu:
            raise PlanGeometryMismatch(
                f"input {p.subpic_id} is {b.sps.pic_width_luma}x{b.sps.pic_height_luma}, "
                f"not a multiple of CTU {ctu}")
        if b.sps.grid != (p.ctu_w, p.ctu_h):
            raise PlanGeometryMismatch(
                f"input {p.subpic_id} spans {b.sps.grid} CTUs, plan gives {(p.ctu_w, p.ctu_h)}")
        entries.append(SubpicEntry(p.ctu_x, p.ctu_y, p.ctu_w, p.ctu_h, p.subpic_id, True))

    sps = SequenceParams(plan.composite_w, plan.composite_h, first.ctu_size_log2, tuple(entries),
                         first.subpic_id_len, first.sps_id)
    sps.validate()
    order = [by_id[p.subpic_id] for p in plan.placements]
    units = []
    for f in range(inputs[0].frame_count):
        slices = []
        for b in order:
            slices.extend(b.access_units[f].slices)
        units.append(AccessUnit(f, slices))
    return MergedBitstream(sps, units, inputs[0].pps_id, list(sei))


def split(m: CodedBitstream, subpic_id: int) -> SubBitstream:
    """Extract one subpicture as a self-contained bitstream."""
    try:
        entry = m.sps.subpic(subpic_id)
    except KeyError:
        raise UnknownSubpicId(f"subpic_id {subpic_id} not in {m.sps.subpic_ids}") from None
    ctu = m.sps.ctu_size
    sps = SequenceParams(entry.ctu_w * ctu, entry.ctu_h * ctu, m.sps.ctu_size_log2,
                         (SubpicEntry(0, 0, entry.ctu_w, entry.ctu_h, subpic_id, entry.independent),),
                         m.sps.subpic_id_len, m.sps.sps_id)
    id_len = m.sps.subpic_id_len
    units = [AccessUnit(au.frame_index, [n for n in au.slices if slice_subpic_id(n, id_len) == subpic_id])
             for au in m.access_units]
    return SubBitstream(sps, units, m.pps_id, [])


def extract_decoded_region(frame: YuvFrame, sp: SequenceParams, subpic_id: int) -> YuvFrame:
    if frame.size != (sp.pic_width_luma, sp.pic_height_luma):
        raise DimensionMismatch(f"frame {frame.size} vs SPS picture "
                                f"{(sp.pic_width_luma, sp.pic_height_luma)}")
    try:
        entry = sp.subpic(subpic_id)
    except KeyError:
        raise UnknownSubpicId(f"subpic_id {subpic_id} not in {sp.subpic_ids}") from None
    return frame.crop(*sp.luma_rect(entry))

"""V3C-style unit sequence with packed video signalling.

Sample stream layout::

    header byte: precision_minus1 u(3) | zero u(5)
    per unit:    size (precision bytes, big endian, covers header + payload)
                 unit header u(32): unit_type u(5) | parameter_set_id u(4) | atlas_id u(6) | reserved u(17)
                 payload

The VPS payload carries the packing information; the mapping from regions
to subpicture ids travels as a prefix SEI (payload type 100) inside the
packed video bitstream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .bitio import BitReader, BitWriter
from .errors import EmptyComponent, Malformed, MissingVps, OutOfBits, TruncatedUnit, UnknownUnitType
from .layout import PlacementPlan, RegionKind, Rotation
from .nal_hls import PACKED_REGIONS_SEI, SeiMessage, SequenceParams


class V3cUnitType(enum.IntEnum):
    VPS = 0
    AD = 1
    OVD = 2
    GVD = 3
    AVD = 4
    PVD = 5


class PackedKind(enum.IntEnum):
    ATTRIBUTE = 0
    GEOMETRY = 1
    OCCUPANCY = 2
    FILLER = 3


_KIND_FROM_PLAN = {
    RegionKind.TEXTURE: PackedKind.ATTRIBUTE,
    RegionKind.GEOMETRY: PackedKind.GEOMETRY,
    RegionKind.FILLER: PackedKind.FILLER,
}


@dataclass(frozen=True)
class V3cUnit:
    unit_type: V3cUnitType
    payload: bytes
    parameter_set_id: int = 0
    atlas_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "unit_type", V3cUnitType(self.unit_type))
        if not self.payload:
            raise EmptyComponent(f"{self.unit_type.name} unit has an empty payload")
        if not 0 <= self.parameter_set_id <= 15:
            raise ValueError(f"parameter_set_id {self.parameter_set_id} outside 0..15")
        if not 0 <= self.atlas_id <= 63:
            raise ValueError(f"atlas_id {self.atlas_id} outside 0..63")
        if self.unit_type == V3cUnitType.VPS and self.atlas_id != 0:
            raise ValueError("VPS units carry atlas_id 0")

    def header(self) -> bytes:
        value = (int(self.unit_type) << 27) | (self.parameter_set_id << 23) | (self.atlas_id << 17)
        return value.to_bytes(4, "big")


@dataclass(frozen=True)
class PackedRegion:
    region_id: int
    kind: PackedKind
    x: int
    y: int
    w: int
    h: int
    rotation: Rotation = Rotation.R0


@dataclass(frozen=True)
class PackingInformation:
    regions: tuple[PackedRegion, ...] = ()

    def region_ids(self) -> list[int]:
        return [r.region_id for r in self.regions]


@dataclass(frozen=True)
class V3cParameterSet:
    vps_id: int = 0
    packing: PackingInformation | None = None


@dataclass(frozen=True)
class PackedRegionsSei:
    entries: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def mapping(self) -> dict[int, int]:
        return dict(self.entries)


_ROTATION_CODES = {Rotation.R0: 0, Rotation.R90: 1}


def encode_vps(vps: V3cParameterSet) -> bytes:
    w = BitWriter()
    w.write_bits(vps.vps_id, 4)
    w.write_flag(vps.packing is not None)
    if vps.packing is not None:
        w.write_ue(len(vps.packing.regions))
        for r in vps.packing.regions:
            w.write_ue(r.region_id)
            w.write_bits(int(r.kind), 3)
            w.write_ue(r.x)
            w.write_ue(r.y)
            w.write_ue(r.w)
            w.write_ue(r.h)
            w.write_bits(_ROTATION_CODES[Rotation(r.rotation)], 2)
    w.write_trailing_bits()
    return w.getvalue()


def decode_vps(payload: bytes, trace: list | None = None) -> V3cParameterSet:
    r = BitReader(payload, trace=trace)
    try:
        vps_id = r.read_bits(4, "vps_id")
        packing = None
        if r.read_flag("packing_present"):
            count = r.read_ue("num_regions")
            if count > 8 * len(payload):
                raise Malformed(f"{count} regions cannot fit in {len(payload)} bytes")
            regions = []
            for i in range(count):
                rid = r.read_ue(f"region[{i}].region_id")
                kind = r.read_bits(3, f"region[{i}].kind")
                x, y = r.read_ue(f"region[{i}].x"), r.read_ue(f"region[{i}].y")
                w, h = r.read_ue(f"region[{i}].w"), r.read_ue(f"region[{i}].h")
                rot = r.read_bits(2, f"region[{i}].rotation")
                if kind > max(PackedKind) or rot > 1:
                    raise Malformed(f"region {rid}: kind {kind} / rotation code {rot} out of range")
                regions.append(PackedRegion(rid, PackedKind(kind), x, y, w, h,
                                            Rotation.R90 if rot else Rotation.R0))
            packing = PackingInformation(tuple(regions))
        r.read_trailing_bits()
    except OutOfBits as exc:
        raise Malformed(f"truncated VPS: {exc}") from None
    return V3cParameterSet(vps_id, packing)


def encode_packed_regions_sei(sei: PackedRegionsSei) -> SeiMessage:
    w = BitWriter()
    w.write_ue(len(sei.entries))
    for region_id, subpic_id in sei.entries:
        w.write_ue(region_id)
        w.write_bits(subpic_id, 16)
    w.write_alignment()
    return SeiMessage(PACKED_REGIONS_SEI, w.getvalue())


def decode_packed_regions_sei(msg: SeiMessage, trace: list | None = None) -> PackedRegionsSei:
    if msg.payload_type != PACKED_REGIONS_SEI:
        raise Malformed(f"SEI payload type {msg.payload_type} is not the packed regions message")
    r = BitReader(msg.payload, trace=trace)
    try:
        count = r.read_ue("num_entries")
        entries = tuple((r.read_ue(f"entry[{i}].region_id"), r.read_bits(16, f"entry[{i}].subpic_id"))
                        for i in range(count))
        r.read_alignment()
    except OutOfBits as exc:
        raise Malformed(f"truncated packed regions SEI: {exc}") from None
    if r.bits_left:
        raise Malformed("bytes after packed regions SEI payload")
    return PackedRegionsSei(entries)


def bind_plan(plan: PlacementPlan) -> tuple[PackingInformation, PackedRegionsSei]:
    ctu = plan.ctu_size
    regions = tuple(PackedRegion(p.region_id, _KIND_FROM_PLAN[p.kind], p.ctu_x * ctu, p.ctu_y * ctu,
                                 p.ctu_w * ctu, p.ctu_h * ctu, p.rotation)
                    for p in plan.placements)
    sei = PackedRegionsSei(tuple((p.region_id, p.subpic_id) for p in plan.placements))
    return PackingInformation(regions), sei


def validate_packing(packing: PackingInformation, sei: PackedRegionsSei, sps: SequenceParams) -> bool:
    """True iff the SEI maps exactly the VPS regions, one-to-one, onto SPS
    subpictures whose rectangles match the signalled region geometry."""
    ids = packing.region_ids()
    sei_ids = [rid for rid, _ in sei.entries]
    if len(set(ids)) != len(ids) or len(set(sei_ids)) != len(sei_ids) or set(ids) != set(sei_ids):
        return False
    targets = [sid for _, sid in sei.entries]
    if len(set(targets)) != len(targets):
        return False
    mapping = sei.mapping()
    ctu = sps.ctu_size
    for region in packing.regions:
        try:
            entry = sps.subpic(mapping[region.region_id])
        except KeyError:
            return False
        if any(v % ctu for v in (region.x, region.y, region.w, region.h)):
            return False
        rect = (entry.ctu_x * ctu, entry.ctu_y * ctu, entry.ctu_w * ctu, entry.ctu_h * ctu)
        if rect != (region.x, region.y, region.w, region.h):
            return False
    return True


def _precision_for(units) -> int:
    biggest = max(4 + len(u.payload) for u in units)
    return max(1, -(-biggest.bit_length() // 8))


def write_sample_stream(units, precision: int | None = None) -> bytes:
    units = list(units)
    if not units or units[0].unit_type != V3cUnitType.VPS:
        raise MissingVps("a V3C sequence must start with a VPS unit")
    if precision is None:
        precision = _precision_for(units)
    if not 1 <= precision <= 8:
        raise ValueError(f"size precision {precision} outside 1..8")
    out = bytearray([(precision - 1) << 5])
    for u in units:
        size = 4 + len(u.payload)
        if size >= 1 << (8 * precision):
            raise ValueError(f"unit of {size} bytes needs more than {precision} size bytes")
        out += size.to_bytes(precision, "big") + u.header() + u.payload
    return bytes(out)


def read_sample_stream(stream: bytes) -> list[V3cUnit]:
    stream = bytes(stream)
    if not stream:
        raise TruncatedUnit("empty sample stream")
    if stream[0] & 0x1F:
        raise Malformed("nonzero reserved bits in sample stream header")
    precision = (stream[0] >> 5) + 1
    pos, units = 1, []
    while pos < len(stream):
        if pos + precision > len(stream):
            raise TruncatedUnit(f"unit size field cut short at byte {pos}")
        size = int.from_bytes(stream[pos:pos + precision], "big")
        pos += precision
        if size < 4 or pos + size > len(stream):
            raise TruncatedUnit(f"unit at byte {pos} declares {size} bytes, "
                                f"{len(stream) - pos} remain")
        header = int.from_bytes(stream[pos:pos + 4], "big")
        raw_type = header >> 27
        if raw_type > max(V3cUnitType):
            raise UnknownUnitType(f"unit_type {raw_type} at byte {pos}")
        if header & 0x1FFFF:
            raise Malformed(f"nonzero reserved bits in unit header at byte {pos}")
        payload = stream[pos + 4:pos + size]
        if not payload:
            raise EmptyComponent(f"empty {V3cUnitType(raw_type).name} unit at byte {pos}")
        if not units and raw_type != V3cUnitType.VPS:
            raise MissingVps(f"first unit is {V3cUnitType(raw_type).name}, not VPS")
        psid, atlas_id = (header >> 23) & 0xF, (header >> 17) & 0x3F
        if raw_type == V3cUnitType.VPS and atlas_id:
            raise Malformed("VPS unit with nonzero atlas_id")
        units.append(V3cUnit(V3cUnitType(raw_type), payload, psid, atlas_id))
        pos += size
    if not units:
        raise MissingVps("sample stream holds no units")
    return units


def mux(vps: V3cParameterSet, atlas_metadata: bytes, packed_video: bytes,
        precision: int | None = None) -> bytes:
    """VPS, atlas data and packed video data units as one sample stream."""
    if not atlas_metadata:
        raise EmptyComponent("atlas metadata is empty")
    if not packed_video:
        raise EmptyComponent("packed video is empty")
    units = [V3cUnit(V3cUnitType.VPS, encode_vps(vps)),
             V3cUnit(V3cUnitType.AD, bytes(atlas_metadata)),
             V3cUnit(V3cUnitType.PVD, bytes(packed_video))]
    return write_sample_stream(units, precision)


def demux(stream: bytes) -> tuple[V3cParameterSet, list[V3cUnit]]:
    units = read_sample_stream(stream)
    return decode_vps(units[0].payload), units


def component(units, unit_type: V3cUnitType) -> bytes:
    for u in units:
        if u.unit_type == unit_type:
            return u.payload
    raise KeyError(V3cUnitType(unit_type).name)

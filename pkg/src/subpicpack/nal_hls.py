"""NAL unit framing and the simplified high-level syntax profile.

The profile keeps only what subpicture merging and extraction need: an SPS
carrying the subpicture grid, a PPS, slices that name their subpicture in
the first header field, and prefix SEI.

NAL header (16 bits)::

    forbidden_zero u(1) | reserved u(1) | layer_id u(6) | nal_type u(5) | temporal_id_plus1 u(3)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .bitio import BitReader, BitWriter, escape_rbsp, unescape_rbsp
from .errors import IdWidthMismatch, InvalidLayout, Malformed, UnknownSubpicId

START_CODE = b"\x00\x00\x01"
LONG_START_CODE = b"\x00\x00\x00\x01"


class NalType(enum.IntEnum):
    TRAIL = 0
    IDR = 7
    CRA = 9
    SPS = 15
    PPS = 16
    PREFIX_SEI = 23

    @property
    def is_vcl(self) -> bool:
        return self in (NalType.TRAIL, NalType.IDR, NalType.CRA)

    @property
    def is_irap(self) -> bool:
        return self in (NalType.IDR, NalType.CRA)


class SliceType(enum.IntEnum):
    I = 0
    P = 1


@dataclass(frozen=True)
class NalUnit:
    nal_type: NalType
    rbsp: bytes
    temporal_id: int = 0
    layer_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nal_type", NalType(self.nal_type))
        if not 0 <= self.temporal_id <= 6:
            raise ValueError(f"temporal_id {self.temporal_id} outside 0..6")
        if not 0 <= self.layer_id <= 63:
            raise ValueError(f"layer_id {self.layer_id} outside 0..63")

    @property
    def is_vcl(self) -> bool:
        return self.nal_type.is_vcl

    def header_bytes(self) -> bytes:
        value = (self.layer_id << 8) | (int(self.nal_type) << 3) | (self.temporal_id + 1)
        return value.to_bytes(2, "big")

    def to_bytes(self) -> bytes:
        """Header plus escaped RBSP, without a start code."""
        return self.header_bytes() + escape_rbsp(self.rbsp)

    @classmethod
    def from_bytes(cls, data: bytes) -> "NalUnit":
        if len(data) < 2:
            raise Malformed(f"NAL unit of {len(data)} bytes has no complete header")
        header = int.from_bytes(data[:2], "big")
        if header >> 15:
            raise Malformed("forbidden_zero_bit is set")
        if (header >> 14) & 1:
            raise Malformed("reserved header bit is set")
        layer_id = (header >> 8) & 0x3F
        raw_type = (header >> 3) & 0x1F
        tid_plus1 = header & 0x7
        try:
            nal_type = NalType(raw_type)
        except ValueError:
            raise Malformed(f"unknown nal_type {raw_type}") from None
        if not 1 <= tid_plus1 <= 7:
            raise Malformed(f"temporal_id_plus1 {tid_plus1} outside 1..7")
        return cls(nal_type, unescape_rbsp(data[2:]), tid_plus1 - 1, layer_id)


def frame_bitstream(units) -> bytes:
    """Annex-B framing.  Four-byte start codes open the stream and every
    parameter set, three-byte start codes everything else."""
    units = list(units)
    if not units:
        raise ValueError("cannot frame an empty unit list")
    out = bytearray()
    for i, unit in enumerate(units):
        long_code = i == 0 or unit.nal_type in (NalType.SPS, NalType.PPS)
        out += LONG_START_CODE if long_code else START_CODE
        out += unit.to_bytes()
    return bytes(out)


def split_nal_payloads(stream: bytes) -> list[tuple[int, bytes]]:
    """Split an Annex-B stream into ``(offset, nal_bytes)`` pairs.

    Offsets point at the first header byte.  Every RBSP of this profile
    ends in a nonzero byte, so a zero byte before ``00 00 01`` always
    belongs to the next start code.
    """
    stream = bytes(stream)
    if stream.startswith(LONG_START_CODE):
        pos = 4
    elif stream.startswith(START_CODE):
        pos = 3
    else:
        raise Malformed("stream does not begin with a start code")
    out = []
    while True:
        nxt = stream.find(START_CODE, pos)
        if nxt < 0:
            out.append((pos, stream[pos:]))
            return out
        end = nxt - 1 if nxt > pos and stream[nxt - 1] == 0 else nxt
        if end <= pos:
            raise Malformed(f"empty NAL unit at byte {pos}")
        out.append((pos, stream[pos:end]))
        pos = nxt + 3


def parse_bitstream(stream: bytes) -> list[NalUnit]:
    return [NalUnit.from_bytes(chunk) for _, chunk in split_nal_payloads(stream)]


def framed_size(unit: NalUnit, long_code: bool = False) -> int:
    return (4 if long_code else 3) + len(unit.to_bytes())


# -- parameter sets ---------------------------------------------------------


@dataclass(frozen=True)
class SubpicEntry:
    ctu_x: int
    ctu_y: int
    ctu_w: int
    ctu_h: int
    subpic_id: int
    independent: bool = True

    def cells(self):
        for y in range(self.ctu_y, self.ctu_y + self.ctu_h):
            for x in range(self.ctu_x, self.ctu_x + self.ctu_w):
                yield x, y


@dataclass(frozen=True)
class SequenceParams:
    pic_width_luma: int
    pic_height_luma: int
    ctu_size_log2: int
    subpics: tuple[SubpicEntry, ...]
    subpic_id_len: int = 8
    sps_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "subpics", tuple(self.subpics))

    @property
    def ctu_size(self) -> int:
        return 1 << self.ctu_size_log2

    @property
    def grid(self) -> tuple[int, int]:
        """Picture size in CTUs, partial CTUs included."""
        ctu = self.ctu_size
        return -(-self.pic_width_luma // ctu), -(-self.pic_height_luma // ctu)

    @property
    def subpic_ids(self) -> list[int]:
        return [s.subpic_id for s in self.subpics]

    def subpic(self, subpic_id: int) -> SubpicEntry:
        for s in self.subpics:
            if s.subpic_id == subpic_id:
                return s
        raise KeyError(subpic_id)

    def luma_rect(self, entry: SubpicEntry) -> tuple[int, int, int, int]:
        """(x, y, w, h) in luma samples, clipped to the picture."""
        ctu = self.ctu_size
        x, y = entry.ctu_x * ctu, entry.ctu_y * ctu
        w = min(entry.ctu_w * ctu, self.pic_width_luma - x)
        h = min(entry.ctu_h * ctu, self.pic_height_luma - y)
        return x, y, w, h

    def validate(self) -> None:
        if not 0 <= self.sps_id <= 15:
            raise InvalidLayout(f"sps_id {self.sps_id} outside 0..15")
        if not 5 <= self.ctu_size_log2 <= 7:
            raise InvalidLayout(f"ctu_size_log2 {self.ctu_size_log2} outside 5..7")
        if not 1 <= self.subpic_id_len <= 16:
            raise InvalidLayout(f"subpic_id_len {self.subpic_id_len} outside 1..16")
        if self.pic_width_luma < 1 or self.pic_height_luma < 1:
            raise InvalidLayout("picture dimensions must be positive")
        if not self.subpics:
            raise InvalidLayout("at least one subpicture is required")
        gw, gh = self.grid
        owner = {}
        for s in self.subpics:
            if s.ctu_w < 1 or s.ctu_h < 1 or s.ctu_x < 0 or s.ctu_y < 0:
                raise InvalidLayout(f"degenerate subpicture {s}")
            if s.ctu_x + s.ctu_w > gw or s.ctu_y + s.ctu_h > gh:
                raise InvalidLayout(f"subpicture {s.subpic_id} leaves the {gw}x{gh} CTU grid")
            for cell in s.cells():
                if cell in owner:
                    raise InvalidLayout(
                        f"subpictures {owner[cell]} and {s.subpic_id} overlap at CTU {cell}")
                owner[cell] = s.subpic_id
        if len(owner) != gw * gh:
            raise InvalidLayout(f"subpictures cover {len(owner)} of {gw * gh} CTUs")
        ids = self.subpic_ids
        if len(set(ids)) != len(ids):
            raise InvalidLayout(f"duplicate subpicture ids {ids}")
        for i in ids:
            if not 0 <= i < (1 << self.subpic_id_len):
                raise InvalidLayout(f"subpic_id {i} does not fit in {self.subpic_id_len} bits")


def encode_sps(sp: SequenceParams) -> NalUnit:
    sp.validate()
    w = BitWriter()
    w.write_ue(sp.sps_id)
    w.write_bits(sp.ctu_size_log2, 3)
    w.write_ue(sp.pic_width_luma)
    w.write_ue(sp.pic_height_luma)
    w.write_ue(len(sp.subpics) - 1)
    for s in sp.subpics:
        w.write_ue(s.ctu_x)
        w.write_ue(s.ctu_y)
        w.write_ue(s.ctu_w - 1)
        w.write_ue(s.ctu_h - 1)
        w.write_flag(s.independent)
    w.write_ue(sp.subpic_id_len - 1)
    for s in sp.subpics:
        w.write_bits(s.subpic_id, sp.subpic_id_len)
    w.write_trailing_bits()
    return NalUnit(NalType.SPS, w.getvalue())


def decode_sps(nal: NalUnit, trace: list | None = None) -> SequenceParams:
    if nal.nal_type != NalType.SPS:
        raise Malformed(f"expected SPS, got {nal.nal_type.name}")
    r = BitReader(nal.rbsp, trace=trace)
    sps_id = r.read_ue("sps_id")
    ctu_log2 = r.read_bits(3, "ctu_size_log2")
    width = r.read_ue("pic_width_luma")
    height = r.read_ue("pic_height_luma")
    count = r.read_ue("num_subpics_minus1") + 1
    if count > width * height:
        raise Malformed(f"{count} subpictures in a {width}x{height} picture")
    geometry = []
    for i in range(count):
        geometry.append((
            r.read_ue(f"subpic[{i}].ctu_x"),
            r.read_ue(f"subpic[{i}].ctu_y"),
            r.read_ue(f"subpic[{i}].ctu_w_minus1") + 1,
            r.read_ue(f"subpic[{i}].ctu_h_minus1") + 1,
            r.read_flag(f"subpic[{i}].independent"),
        ))
    id_len = r.read_ue("subpic_id_len_minus1") + 1
    if id_len > 16:
        raise Malformed(f"subpic_id_len {id_len} exceeds 16")
    ids = [r.read_bits(id_len, f"subpic[{i}].subpic_id") for i in range(count)]
    r.read_trailing_bits()
    subpics = tuple(SubpicEntry(x, y, cw, ch, sid, ind)
                    for (x, y, cw, ch, ind), sid in zip(geometry, ids))
    sp = SequenceParams(width, height, ctu_log2, subpics, id_len, sps_id)
    try:
        sp.validate()
    except InvalidLayout as exc:
        raise Malformed(f"inconsistent SPS: {exc}") from None
    return sp


@dataclass(frozen=True)
class PictureParams:
    pps_id: int = 0
    sps_id: int = 0


def encode_pps(pps: PictureParams) -> NalUnit:
    w = BitWriter()
    w.write_ue(pps.pps_id)
    w.write_ue(pps.sps_id)
    w.write_trailing_bits()
    return NalUnit(NalType.PPS, w.getvalue())


def decode_pps(nal: NalUnit, trace: list | None = None) -> PictureParams:
    if nal.nal_type != NalType.PPS:
        raise Malformed(f"expected PPS, got {nal.nal_type.name}")
    r = BitReader(nal.rbsp, trace=trace)
    pps = PictureParams(r.read_ue("pps_id"), r.read_ue("sps_id"))
    r.read_trailing_bits()
    return pps


# -- SEI ---------------------------------------------------------------------

PACKED_REGIONS_SEI = 100


@dataclass(frozen=True)
class SeiMessage:
    payload_type: int
    payload: bytes


def encode_sei(msg: SeiMessage) -> NalUnit:
    w = BitWriter()
    w.write_ue(msg.payload_type)
    w.write_ue(len(msg.payload))
    w.write_alignment()
    w.write_bytes(msg.payload)
    w.write_trailing_bits()
    return NalUnit(NalType.PREFIX_SEI, w.getvalue())


def decode_sei(nal: NalUnit, trace: list | None = None) -> SeiMessage:
    if nal.nal_type != NalType.PREFIX_SEI:
        raise Malformed(f"expected SEI, got {nal.nal_type.name}")
    r = BitReader(nal.rbsp, trace=trace)
    payload_type = r.read_ue("payload_type")
    size = r.read_ue("payload_size")
    r.read_alignment()
    payload = r.read_bytes(size, "payload")
    r.read_trailing_bits()
    return SeiMessage(payload_type, payload)


# -- slices ------------------------------------------------------------------


@dataclass(frozen=True)
class SliceUnit:
    subpic_id: int
    slice_type: SliceType
    payload: bytes = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "slice_type", SliceType(self.slice_type))


def slice_header_bits(subpic_id_len: int, slice_type: SliceType) -> int:
    # subpic_id + ue(slice_type) + alignment
    bits = subpic_id_len + 2 * (int(slice_type) + 1).bit_length() - 1
    return bits + 8 - bits % 8


def encode_slice(s: SliceUnit, sp: SequenceParams, nal_type: NalType | None = None) -> NalUnit:
    """Slice NAL: subpic_id u(id_len), slice_type ue, alignment, payload, trailing bits.

    ``nal_type`` defaults to IDR for I slices and TRAIL for P slices.
    """
    if not 0 <= s.subpic_id < (1 << sp.subpic_id_len):
        raise IdWidthMismatch(f"subpic_id {s.subpic_id} does not fit in {sp.subpic_id_len} bits")
    if nal_type is None:
        nal_type = NalType.IDR if s.slice_type == SliceType.I else NalType.TRAIL
    if not NalType(nal_type).is_vcl:
        raise ValueError(f"{NalType(nal_type).name} is not a slice NAL type")
    w = BitWriter()
    w.write_bits(s.subpic_id, sp.subpic_id_len)
    w.write_ue(int(s.slice_type))
    w.write_alignment()
    w.write_bytes(s.payload)
    w.write_trailing_bits()
    return NalUnit(nal_type, w.getvalue())


def slice_subpic_id(nal: NalUnit, subpic_id_len: int) -> int:
    """Peek at the subpicture id without decoding the rest of the slice."""
    return BitReader(nal.rbsp).read_bits(subpic_id_len)


def decode_slice(nal: NalUnit, sp: SequenceParams, trace: list | None = None) -> SliceUnit:
    if not nal.is_vcl:
        raise Malformed(f"expected a slice, got {nal.nal_type.name}")
    r = BitReader(nal.rbsp, trace=trace)
    subpic_id = r.read_bits(sp.subpic_id_len, "subpic_id")
    raw_type = r.read_ue("slice_type")
    if raw_type not in (0, 1):
        raise Malformed(f"unknown slice_type {raw_type}")
    r.read_alignment()
    if nal.rbsp[-1:] != b"\x80":
        raise Malformed("slice does not end with rbsp trailing bits")
    payload = r.read_bytes(r.bits_left // 8 - 1, "payload")
    r.read_trailing_bits()
    if subpic_id not in sp.subpic_ids:
        raise UnknownSubpicId(f"slice names subpic_id {subpic_id}, absent from SPS {sp.subpic_ids}")
    return SliceUnit(subpic_id, SliceType(raw_type), payload)

"""Anchor versus packed delivery of texture/geometry atlas pairs.

The anchor codes each atlas as its own bitstream and needs one decoder per
bitstream.  The packed path pads and places both atlases (plus filler) in
one composite picture, merges the per-region bitstreams, wraps the result
in a V3C sample stream, and on the receiving side demuxes, decodes once and
extracts the atlases again.  Every packed run checks the round trip.

Under the mock codec the analogue of a BD-rate loss is the byte overhead:
filler slice payloads plus the change in parameter-set/SEI bytes.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInput, OddDimensions, RoundTripFailure
from .layout import PlacementPlan, RegionKind, RegionSpec, Rotation, filler_area, pad_to_grid, plan_packing
from .mockcodec import MockCodecConfig, make_filler_frame, mock_decode, mock_encode
from .subpic_tools import CodedBitstream, MergedBitstream, SubBitstream, extract_decoded_region, merge, split
from .v3c import (V3cParameterSet, V3cUnitType, bind_plan, component, decode_packed_regions_sei, demux,
                  encode_packed_regions_sei, mux, validate_packing)
from .yuv import YuvFrame

log = logging.getLogger(__name__)

DEFAULT_FPS = 30


def synthetic_frame(width: int, height: int, frame_index: int, key: int) -> YuvFrame:
    """Cheap deterministic test pattern, distinct per key and frame."""
    if width % 2 or height % 2:
        raise OddDimensions(f"atlas frames need even dimensions, got {width}x{height}")
    xs = np.arange(width, dtype=np.int64)[None, :]
    ys = np.arange(height, dtype=np.int64)[:, None]
    y = (3 * xs + 5 * ys + 7 * frame_index + 11 * key) % 251
    c = (xs[:, : width // 2] + 2 * ys[: height // 2] + frame_index + key) % 256
    return YuvFrame(y.astype(np.uint8), c.astype(np.uint8), (255 - c).astype(np.uint8))


@dataclass
class AtlasPair:
    texture: RegionSpec
    geometry: RegionSpec
    frames: int = 17
    texture_source: object = None
    geometry_source: object = None
    texture_cfg: MockCodecConfig | None = None
    geometry_cfg: MockCodecConfig | None = None

    def __post_init__(self):
        if self.texture.region_id == self.geometry.region_id:
            raise ValueError("texture and geometry need distinct region ids")
        for src in (self.texture_source, self.geometry_source):
            if src is not None and not callable(src) and len(src) != self.frames:
                raise ValueError(f"frame source has {len(src)} frames, pair has {self.frames}")

    @classmethod
    def of(cls, texture_size, geometry_size, frames: int = 17, **kw) -> "AtlasPair":
        return cls(RegionSpec(RegionKind.TEXTURE, *texture_size, region_id=0),
                   RegionSpec(RegionKind.GEOMETRY, *geometry_size, region_id=1), frames, **kw)

    def region(self, region_id: int) -> RegionSpec:
        return self.texture if region_id == self.texture.region_id else self.geometry

    def source_frame(self, region_id: int, f: int, key: int) -> YuvFrame:
        region = self.region(region_id)
        src = self.texture_source if region is self.texture else self.geometry_source
        if src is None:
            return synthetic_frame(region.width, region.height, f, key)
        return src(f) if callable(src) else src[f]

    def config(self, region_id: int, default: MockCodecConfig) -> MockCodecConfig:
        cfg = self.texture_cfg if region_id == self.texture.region_id else self.geometry_cfg
        return cfg or default


@dataclass
class PipelineStats:
    decoder_instances: int
    total_vcl_bytes: int
    overhead_bytes: int = 0
    filler_pixel_rate: int = 0
    filler_vcl_bytes: int = 0
    parameter_delta_bytes: int = 0
    pairs: int = 0
    plans: tuple[PlacementPlan, ...] = field(default=(), compare=False, repr=False)

    @property
    def overhead_fraction(self) -> float:
        denom = self.total_vcl_bytes + self.overhead_bytes
        return self.overhead_bytes / denom if denom else 0.0

    def __add__(self, other: "PipelineStats") -> "PipelineStats":
        return PipelineStats(
            self.decoder_instances + other.decoder_instances,
            self.total_vcl_bytes + other.total_vcl_bytes,
            self.overhead_bytes + other.overhead_bytes,
            self.filler_pixel_rate + other.filler_pixel_rate,
            self.filler_vcl_bytes + other.filler_vcl_bytes,
            self.parameter_delta_bytes + other.parameter_delta_bytes,
            self.pairs + other.pairs,
            self.plans + other.plans,
        )


def nominal_total_bytes(bitrate_bps: float, frames: int, fps: float = DEFAULT_FPS) -> int:
    """Bytes a stream at ``bitrate_bps`` spends on ``frames`` frames."""
    return round(bitrate_bps * frames / fps / 8)


def rate_matched_configs(bitrate_bps: float, frames: int, fps: float = DEFAULT_FPS,
                         base: MockCodecConfig = MockCodecConfig(),
                         texture_share: float = 0.5) -> tuple[MockCodecConfig, MockCodecConfig]:
    """Texture and geometry configs whose payloads add up to ``bitrate_bps``.

    IRAP and inter payloads keep the ratio of ``base``; rounding remainders
    land in the IRAP pictures.
    """
    total = nominal_total_bytes(bitrate_bps, frames, fps)
    tex_total = round(total * texture_share)
    out = []
    iraps = -(-frames // base.intra_period)
    inters = frames - iraps
    for budget in (tex_total, total - tex_total):
        weight = base.irap_payload_bytes * iraps + base.inter_payload_bytes * inters
        inter = max(1, budget * base.inter_payload_bytes // weight)
        irap = max(1, (budget - inters * inter) // iraps)
        out.append(dataclasses.replace(base, irap_payload_bytes=irap, inter_payload_bytes=inter))
    return out[0], out[1]


def payload_key(pair_index: int, region_id: int) -> int:
    return (pair_index << 16) | region_id


def _subpic_id_len(count: int) -> int:
    return max(1, (count - 1).bit_length())


def _parameter_bytes_sent(b: CodedBitstream) -> int:
    emissions = sum(1 for i, au in enumerate(b.access_units) if i == 0 or au.is_irap)
    return emissions * b.parameter_set_bytes()


def encode_anchor_pair(pair: AtlasPair, cfg: MockCodecConfig, index: int = 0,
                       ctu: int = 128) -> dict[int, SubBitstream]:
    """One independent bitstream per atlas, keyed by region id."""
    out = {}
    for region in (pair.texture, pair.geometry):
        out[region.region_id] = mock_encode(
            pair.frames, 0, pair.config(region.region_id, cfg),
            width=region.width, height=region.height, ctu_size=ctu, subpic_id_len=1,
            key=payload_key(index, region.region_id))
    return out


def run_anchor(pairs, cfg: MockCodecConfig = MockCodecConfig()) -> PipelineStats:
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no atlas pairs")
    total = 0
    for i, pair in enumerate(pairs):
        for b in encode_anchor_pair(pair, cfg, i).values():
            total += b.vcl_payload_bytes()
    return PipelineStats(2 * len(pairs), total, pairs=len(pairs))


@dataclass
class PackedPair:
    plan: PlacementPlan
    inputs: dict[int, SubBitstream]
    merged: MergedBitstream
    stream: bytes
    stats: PipelineStats


class _RegionFrames:
    """Lazy reference frames for one placement: padded, rotated source."""

    def __init__(self, pair: AtlasPair, placement, ctu: int, key: int):
        self.pair, self.placement, self.ctu, self.key = pair, placement, ctu, key

    def __len__(self):
        return self.pair.frames

    def __getitem__(self, f):
        p = self.placement
        if p.kind == RegionKind.FILLER:
            return make_filler_frame(p.ctu_w * self.ctu, p.ctu_h * self.ctu)
        region = self.pair.region(p.region_id)
        frame = self.pair.source_frame(p.region_id, f, self.key)
        frame = frame.padded(*pad_to_grid(region.width, region.height, self.ctu))
        return frame.rotated(1) if p.rotation == Rotation.R90 else frame


def _restore(frame: YuvFrame, region: RegionSpec, rotation: Rotation) -> YuvFrame:
    if rotation == Rotation.R90:
        frame = frame.rotated(-1)
    return frame.crop(0, 0, region.width, region.height)


def pack_pair(pair: AtlasPair, cfg: MockCodecConfig = MockCodecConfig(), index: int = 0,
              ctu: int = 128, allow_rotation: bool = False, verify: bool = True) -> PackedPair:
    """Run the packed path for one pair and check that it round-trips."""
    plan = plan_packing([pair.texture, pair.geometry], ctu, allow_rotation)
    id_len = _subpic_id_len(len(plan.placements))
    inputs = {}
    for p in plan.placements:
        region_cfg = cfg if p.kind == RegionKind.FILLER else pair.config(p.region_id, cfg)
        inputs[p.subpic_id] = mock_encode(
            pair.frames, p.subpic_id, region_cfg, width=p.ctu_w * ctu, height=p.ctu_h * ctu,
            ctu_size=ctu, subpic_id_len=id_len, key=payload_key(index, p.region_id))
    packing, sei = bind_plan(plan)
    merged = merge(list(inputs.values()), plan, sei=[encode_packed_regions_sei(sei)])
    video = merged.to_bytes()
    atlas_metadata = f"atlas-data pair={index} frames={pair.frames}".encode()
    stream = mux(V3cParameterSet(0, packing), atlas_metadata, video)

    if verify:
        _verify_packed(pair, plan, inputs, stream, cfg, index, ctu)

    content = [inputs[p.subpic_id] for p in plan.content()]
    fillers = [inputs[p.subpic_id] for p in plan.fillers()]
    filler_vcl = sum(b.vcl_payload_bytes() for b in fillers)
    delta = _parameter_bytes_sent(merged) - sum(_parameter_bytes_sent(b) for b in inputs.values())
    stats = PipelineStats(
        decoder_instances=1,
        total_vcl_bytes=sum(b.vcl_payload_bytes() for b in content),
        overhead_bytes=filler_vcl + delta,
        filler_pixel_rate=filler_area(plan),
        filler_vcl_bytes=filler_vcl,
        parameter_delta_bytes=delta,
        pairs=1,
        plans=(plan,),
    )
    log.debug("pair %d: plan %dx%d, %d fillers, overhead %d bytes", index, plan.composite_w,
              plan.composite_h, len(fillers), stats.overhead_bytes)
    return PackedPair(plan, inputs, merged, stream, stats)


def _verify_packed(pair, plan, inputs, stream, cfg, index, ctu):
    vps, units = demux(stream)
    video = component(units, V3cUnitType.PVD)
    received = MergedBitstream.from_bytes(video)
    if received.to_bytes() != video:
        raise RoundTripFailure(f"pair {index}: packed video does not re-serialize identically")
    if vps.packing is None or len(received.sei) != 1:
        raise RoundTripFailure(f"pair {index}: packing signalling missing")
    sei = decode_packed_regions_sei(received.sei[0])
    if not validate_packing(vps.packing, sei, received.sps):
        raise RoundTripFailure(f"pair {index}: VPS packing and SEI mapping disagree")
    mapping = sei.mapping()
    rotations = {r.region_id: r.rotation for r in vps.packing.regions}

    for p in plan.placements:
        sid = mapping[p.region_id]
        if split(received, sid).slice_payloads() != inputs[p.subpic_id].slice_payloads():
            raise RoundTripFailure(f"pair {index}: region {p.region_id} payloads changed")

    references = {p.subpic_id: _RegionFrames(pair, p, ctu, payload_key(index, p.region_id))
                  for p in plan.placements}
    keys = {p.subpic_id: payload_key(index, p.region_id) for p in plan.placements}
    for f in range(pair.frames):
        one = MergedBitstream(received.sps, [received.access_units[f]], received.pps_id, received.sei)
        decoded = mock_decode(one, references, cfg.seed, keys)[0]
        for region in (pair.texture, pair.geometry):
            crop = extract_decoded_region(decoded, received.sps, mapping[region.region_id])
            restored = _restore(crop, region, rotations[region.region_id])
            if restored != pair.source_frame(region.region_id, f, payload_key(index, region.region_id)):
                raise RoundTripFailure(f"pair {index}: {region.kind.value} frame {f} differs after extraction")


def _map_pairs(fn, pairs, workers):
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(len(pairs)), pairs))
    return [fn(i, p) for i, p in enumerate(pairs)]


def run_packed(pairs, cfg: MockCodecConfig = MockCodecConfig(), ctu: int = 128,
               allow_rotation: bool = False, workers: int = 1, verify: bool = True) -> PipelineStats:
    pairs = list(pairs)
    if not pairs:
        raise EmptyInput("no atlas pairs")
    results = _map_pairs(lambda i, p: pack_pair(p, cfg, i, ctu, allow_rotation, verify), pairs, workers)
    total = PipelineStats(0, 0)
    for r in results:
        total = total + r.stats
    return total


@dataclass
class Comparison:
    decoder_ratio: float
    anchor_decoders: int
    packed_decoders: int
    overhead_bytes: int
    overhead_fraction: float
    filler_pixel_rate: int
    total_vcl_bytes: int
    reference_fraction: float | None = None

    def rows(self) -> list[tuple[str, str]]:
        rows = [
            ("anchor decoders", str(self.anchor_decoders)),
            ("packed decoders", str(self.packed_decoders)),
            ("decoder ratio", f"{self.decoder_ratio:.2f}"),
            ("content VCL bytes", str(self.total_vcl_bytes)),
            ("overhead bytes", str(self.overhead_bytes)),
            ("overhead", f"{100 * self.overhead_fraction:.3f}%"),
            ("filler luma samples/frame", str(self.filler_pixel_rate)),
        ]
        if self.reference_fraction is not None:
            rows.append(("overhead vs nominal rate", f"{100 * self.reference_fraction:.3f}%"))
        return rows

    def to_text(self) -> str:
        rows = self.rows()
        width = max(len(k) for k, _ in rows)
        lines = ["Packed vs anchor (mock codec byte overhead)"]
        lines += [f"{k.ljust(width)}  {v.rjust(12)}" for k, v in rows]
        lines.append("filler payload sizes apply per filler subpicture per frame")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        return "metric,value\n" + "".join(f"{k},{v}\n" for k, v in self.rows())


def compare(anchor: PipelineStats, packed: PipelineStats, reference_bytes: int | None = None) -> Comparison:
    """Summarise the packed path against the anchor.  With ``reference_bytes``
    the overhead is also expressed against that nominal content size."""
    ref = None
    if reference_bytes:
        ref = packed.overhead_bytes / (reference_bytes + packed.overhead_bytes)
    return Comparison(
        decoder_ratio=anchor.decoder_instances / packed.decoder_instances,
        anchor_decoders=anchor.decoder_instances,
        packed_decoders=packed.decoder_instances,
        overhead_bytes=packed.overhead_bytes,
        overhead_fraction=packed.overhead_fraction,
        filler_pixel_rate=packed.filler_pixel_rate,
        total_vcl_bytes=packed.total_vcl_bytes,
        reference_fraction=ref,
    )

"""Deterministic stand-in for the video encoder and decoder.

Slice payloads are opaque bytes drawn from a keyed SHAKE-128 stream of
``(seed, key, frame_index)`` where the key defaults to the subpicture id.
Decoding checks every payload against that stream and then composites
caller-supplied reference frames into the subpicture rectangles.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import DimensionMismatch, MissingReference, PayloadCorrupt
from .nal_hls import NalType, SequenceParams, SliceType, SliceUnit, SubpicEntry, decode_slice, encode_slice
from .subpic_tools import AccessUnit, CodedBitstream, SubBitstream
from .yuv import YuvFrame

FILLER_VALUE = 128


@dataclass(frozen=True)
class MockCodecConfig:
    seed: int = 0
    irap_payload_bytes: int = 236
    inter_payload_bytes: int = 14
    intra_period: int = 17

    def __post_init__(self):
        if self.irap_payload_bytes < 1 or self.inter_payload_bytes < 1:
            raise ValueError("payload sizes must be at least one byte")
        if self.intra_period < 1:
            raise ValueError("intra_period must be positive")

    def is_irap(self, frame_index: int) -> bool:
        return frame_index % self.intra_period == 0

    def payload_size(self, frame_index: int) -> int:
        return self.irap_payload_bytes if self.is_irap(frame_index) else self.inter_payload_bytes

    def vcl_bytes(self, frames: int) -> int:
        """Total slice payload bytes for ``frames`` frames of one subpicture."""
        iraps = -(-frames // self.intra_period)
        return iraps * self.irap_payload_bytes + (frames - iraps) * self.inter_payload_bytes


def make_filler_frame(w: int, h: int, value: int = FILLER_VALUE) -> YuvFrame:
    return YuvFrame.filled(w, h, value)


def payload_stream(seed: int, key: int, frame_index: int, n: int) -> bytes:
    return hashlib.shake_128(f"{seed}:{key}:{frame_index}".encode()).digest(n)


def mock_encode(frames: int, subpic_id: int, cfg: MockCodecConfig = MockCodecConfig(), *,
                width: int = 128, height: int = 128, ctu_size: int = 128,
                subpic_id_len: int = 8, key: int | None = None) -> SubBitstream:
    """Produce a single-subpicture bitstream of ``frames`` access units.

    Every ``cfg.intra_period``-th frame is an IDR picture carrying
    ``cfg.irap_payload_bytes``; the rest are TRAIL pictures.
    """
    if frames < 1:
        raise ValueError("need at least one frame")
    ctu_log2 = ctu_size.bit_length() - 1
    if 1 << ctu_log2 != ctu_size:
        raise ValueError(f"CTU size {ctu_size} is not a power of two")
    grid_w, grid_h = -(-width // ctu_size), -(-height // ctu_size)
    sps = SequenceParams(width, height, ctu_log2, (SubpicEntry(0, 0, grid_w, grid_h, subpic_id),),
                         subpic_id_len)
    sps.validate()
    key = subpic_id if key is None else key
    units = []
    for f in range(frames):
        irap = cfg.is_irap(f)
        payload = payload_stream(cfg.seed, key, f, cfg.payload_size(f))
        s = SliceUnit(subpic_id, SliceType.I if irap else SliceType.P, payload)
        nal = encode_slice(s, sps, NalType.IDR if irap else NalType.TRAIL)
        units.append(AccessUnit(f, [nal]))
    return SubBitstream(sps, units)


def mock_decode(bitstream: CodedBitstream, reference, seed: int = 0, keys=None) -> list[YuvFrame]:
    """Check payload integrity and composite ``reference`` frames.

    ``reference`` maps subpic_id to a frame sequence whose sizes equal the
    subpicture rectangles; ``keys`` maps subpic_id to the payload key used
    at encode time (identity when omitted).
    """
    sps = bitstream.sps
    keys = keys or {}
    for sid in sps.subpic_ids:
        if sid not in reference:
            raise MissingReference(f"no reference frames for subpic_id {sid}")
    out = []
    for au in bitstream.access_units:
        f = au.frame_index
        for nal in au.slices:
            s = decode_slice(nal, sps)
            expected = payload_stream(seed, keys.get(s.subpic_id, s.subpic_id), f, len(s.payload))
            if s.payload != expected:
                bad = next(i for i, (a, b) in enumerate(zip(s.payload, expected)) if a != b)
                raise PayloadCorrupt(f"subpic {s.subpic_id} frame {f}: payload differs at byte {bad}")
        frame = YuvFrame.filled(sps.pic_width_luma, sps.pic_height_luma, 0)
        for entry in sps.subpics:
            x, y, w, h = sps.luma_rect(entry)
            frames = reference[entry.subpic_id]
            if f >= len(frames):
                raise MissingReference(f"subpic {entry.subpic_id} has no reference frame {f}")
            ref = frames[f]
            if ref.size != (w, h):
                raise DimensionMismatch(f"reference for subpic {entry.subpic_id} is {ref.size}, "
                                        f"region is {(w, h)}")
            frame.paste(ref, x, y)
        out.append(frame)
    return out

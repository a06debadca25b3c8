"""Human-readable syntax dumps for Annex-B and V3C sample streams.

Bit offsets are relative to the start of each RBSP (after emulation
prevention is removed); byte offsets are positions in the input file.
"""

from __future__ import annotations

from .errors import Malformed
from .nal_hls import (PACKED_REGIONS_SEI, NalType, NalUnit, decode_pps, decode_sei, decode_slice,
                      decode_sps, split_nal_payloads)
from .v3c import V3cUnitType, decode_packed_regions_sei, decode_vps, read_sample_stream


def is_annexb(data: bytes) -> bool:
    return data.startswith(b"\x00\x00\x01") or data.startswith(b"\x00\x00\x00\x01")


def _fields(trace, indent):
    lines = []
    for name, offset, width, value in trace:
        shown = "" if value is None else f" = {value}"
        if len(shown) > 60:
            shown = shown[:57] + "..."
        lines.append(f"{indent}  @{offset:>6} +{width:<3} {name}{shown}")
    return lines


def dump_annexb(data: bytes, indent: str = "", base: int = 0) -> list[str]:
    lines = []
    sps = None
    for offset, chunk in split_nal_payloads(data):
        nal = NalUnit.from_bytes(chunk)
        lines.append(f"{indent}NAL @{base + offset} {nal.nal_type.name} "
                     f"layer={nal.layer_id} tid={nal.temporal_id} rbsp={len(nal.rbsp)}B")
        trace: list = []
        if nal.nal_type == NalType.SPS:
            sps = decode_sps(nal, trace)
        elif nal.nal_type == NalType.PPS:
            decode_pps(nal, trace)
        elif nal.nal_type == NalType.PREFIX_SEI:
            msg = decode_sei(nal, trace)
            if msg.payload_type == PACKED_REGIONS_SEI:
                lines.extend(_fields(trace, indent))
                trace = []
                lines.append(f"{indent}  packed regions payload:")
                decode_packed_regions_sei(msg, trace)
                lines.extend(_fields(trace, indent + "  "))
                continue
        else:
            if sps is None:
                raise Malformed(f"slice at byte {base + offset} before any SPS")
            decode_slice(nal, sps, trace)
        lines.extend(_fields(trace, indent))
    return lines


def dump_v3c(data: bytes) -> list[str]:
    units = read_sample_stream(data)
    precision = (data[0] >> 5) + 1
    lines = [f"V3C sample stream, size precision {precision} bytes, {len(units)} units"]
    pos = 1
    for u in units:
        body = pos + precision + 4
        lines.append(f"unit @{pos} {u.unit_type.name} psid={u.parameter_set_id} "
                     f"atlas={u.atlas_id} payload={len(u.payload)}B")
        if u.unit_type == V3cUnitType.VPS:
            trace: list = []
            decode_vps(u.payload, trace)
            lines.extend(_fields(trace, ""))
        elif u.unit_type == V3cUnitType.PVD and is_annexb(u.payload):
            lines.extend(dump_annexb(u.payload, "  ", body))
        pos += precision + 4 + len(u.payload)
    return lines


def dump(data: bytes) -> str:
    lines = dump_annexb(data) if is_annexb(data) else dump_v3c(data)
    return "\n".join(lines) + "\n"

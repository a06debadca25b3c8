"""Command line entry point: ``subpic-pack <command> ...``.

Failures print one ``error: CODE: message`` line to stderr and exit 1.
Set SUBPIC_PACK_LOG to a logging level name for diagnostics.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .dump import dump
from .errors import SubpicPackError
from .layout import PlacementPlan, plan_packing, read_regions
from .mockcodec import MockCodecConfig, make_filler_frame, mock_encode
from .pipeline import AtlasPair, compare, nominal_total_bytes, rate_matched_configs, run_anchor, run_packed
from .rd_metrics import RdCurve, bd_rate, ctc_ladder
from .subpic_tools import CodedBitstream, merge, split
from .v3c import V3cParameterSet, bind_plan, demux, encode_packed_regions_sei, mux
from .yuv import read_yuv420, write_yuv420

log = logging.getLogger("subpicpack")


def _codec_config(args) -> MockCodecConfig:
    return MockCodecConfig(seed=args.seed, irap_payload_bytes=args.irap_bytes,
                           inter_payload_bytes=args.inter_bytes, intra_period=args.intra_period)


def _write(path, data, binary=True):
    if path is None or str(path) == "-":
        if binary:
            sys.stdout.buffer.write(data)
        else:
            sys.stdout.write(data)
        return
    Path(path).write_bytes(data) if binary else Path(path).write_text(data)


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {path}")
    return p


def cmd_plan(args):
    plan = plan_packing(read_regions(args.regions.read_text()), args.ctu, args.rotate)
    _write(args.out, plan.to_text(), binary=False)
    if args.figure:
        from .figures import plot_plan
        plot_plan(plan, args.figure)


def cmd_encode(args):
    sub = mock_encode(args.frames, args.subpic_id, _codec_config(args), width=args.width,
                      height=args.height, ctu_size=args.ctu, subpic_id_len=args.id_len, key=args.key)
    _write(args.out, sub.to_bytes())


def cmd_filler(args):
    frame = make_filler_frame(args.width, args.height, args.value)
    if args.out in (None, "-"):
        sys.stdout.buffer.write(frame.to_bytes() * args.frames)
    else:
        write_yuv420(args.out, [frame] * args.frames)


def cmd_merge(args):
    plan = PlacementPlan.from_text(args.plan.read_text())
    inputs = [CodedBitstream.from_bytes(p.read_bytes()) for p in args.bitstreams]
    _, sei = bind_plan(plan)
    merged = merge(inputs, plan, sei=[encode_packed_regions_sei(sei)])
    _write(args.out, merged.to_bytes())


def cmd_split(args):
    merged = CodedBitstream.from_bytes(args.merged.read_bytes())
    _write(args.out, split(merged, args.subpic_id).to_bytes())


def cmd_mux(args):
    packing = None
    if args.plan:
        packing, _ = bind_plan(PlacementPlan.from_text(args.plan.read_text()))
    stream = mux(V3cParameterSet(args.vps_id, packing), args.atlas.read_bytes(), args.video.read_bytes(),
                 args.precision)
    _write(args.out, stream)


def cmd_demux(args):
    vps, units = demux(args.stream.read_bytes())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, u in enumerate(units):
        name = out / f"{i:02d}_{u.unit_type.name.lower()}.bin"
        name.write_bytes(u.payload)
        print(f"{name}\t{u.unit_type.name}\t{len(u.payload)}")
    if vps.packing is not None:
        for r in vps.packing.regions:
            print(f"region {r.region_id} {r.kind.name.lower()} {r.x} {r.y} {r.w} {r.h} {int(r.rotation)}")


def cmd_inspect(args):
    sys.stdout.write(dump(args.file.read_bytes()))


def cmd_qp_ladder(args):
    sys.stdout.write(ctc_ladder(args.sequence).to_text())


def cmd_bdrate(args):
    anchor = RdCurve.from_csv(args.anchor.read_text())
    test = RdCurve.from_csv(args.test.read_text())
    value = bd_rate(anchor, test)
    print(f"{value:.4f}%")
    if args.figure:
        from .figures import plot_rd_curves
        plot_rd_curves(anchor, test, args.figure, bd=value)


def _load_pairs(config: dict, args, base: Path):
    frames = args.frames or config.get("frames", 17)
    fps = config.get("fps", 30)
    mbps = config.get("bitrate_mbps")
    pairs = []
    for entry in config["pairs"]:
        kw = {}
        if mbps is not None:
            per_pair = mbps * 1e6 / len(config["pairs"])
            kw["texture_cfg"], kw["geometry_cfg"] = rate_matched_configs(
                per_pair, frames, fps, _codec_config(args))
        for part in ("texture", "geometry"):
            if f"{part}_yuv" in entry:
                w, h = entry[part]
                kw[f"{part}_source"] = read_yuv420(base / entry[f"{part}_yuv"], w, h)[:frames]
        pairs.append(AtlasPair.of(tuple(entry["texture"]), tuple(entry["geometry"]), frames, **kw))
    reference = nominal_total_bytes(mbps * 1e6, frames, fps) if mbps is not None else None
    return pairs, reference


def cmd_simulate(args):
    config = json.loads(args.config.read_text())
    pairs, reference = _load_pairs(config, args, args.config.parent)
    cfg = _codec_config(args)
    anchor = run_anchor(pairs, cfg)
    packed = run_packed(pairs, cfg, args.ctu, args.rotate, workers=args.workers)
    report = compare(anchor, packed, reference)
    sys.stdout.write(report.to_text())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(report.to_text())
        (out / "report.csv").write_text(report.to_csv())
        from .figures import plot_comparison, plot_plan
        plot_comparison(anchor, packed, out / "comparison.png")
        for i, plan in enumerate(packed.plans):
            plot_plan(plan, out / f"plan_{i:02d}.png", title=f"pair {i}")
            (out / f"plan_{i:02d}.txt").write_text(plan.to_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subpic-pack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    codec = argparse.ArgumentParser(add_help=False)
    codec.add_argument("--seed", type=int, default=0, help="payload seed (default 0)")
    codec.add_argument("--irap-bytes", type=int, default=236, help="IRAP slice payload bytes (default 236)")
    codec.add_argument("--inter-bytes", type=int, default=14, help="inter slice payload bytes (default 14)")
    codec.add_argument("--intra-period", type=int, default=17, help="frames per IRAP period (default 17)")
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--ctu", type=int, default=128, choices=(32, 64, 128), help="CTU size (default 128)")
    grid.add_argument("--rotate", action="store_true", help="allow 90 degree region rotation")

    p = sub.add_parser("plan", parents=[grid], help="pack regions into a composite picture")
    p.add_argument("regions", type=_existing, help="lines of '<region_id> <kind> <width> <height>'")
    p.add_argument("--out", help="plan file (default stdout)")
    p.add_argument("--figure", help="also render the plan to this image file")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("encode", parents=[codec], help="mock-encode a single-subpicture bitstream")
    p.add_argument("--subpic-id", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--frames", type=int, default=17)
    p.add_argument("--ctu", type=int, default=128, choices=(32, 64, 128))
    p.add_argument("--id-len", type=int, default=8, help="subpic id length in bits (default 8)")
    p.add_argument("--key", type=int, help="payload key (default: the subpic id)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("filler", help="write constant-value 4:2:0 filler frames")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--frames", type=int, default=17)
    p.add_argument("--value", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filler)

    p = sub.add_parser("merge", help="merge sub-bitstreams according to a plan")
    p.add_argument("plan", type=_existing)
    p.add_argument("bitstreams", type=_existing, nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("split", help="extract one subpicture from a merged bitstream")
    p.add_argument("merged", type=_existing)
    p.add_argument("--subpic-id", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("mux", help="build a V3C sample stream")
    p.add_argument("--video", type=_existing, required=True, help="packed video (Annex-B)")
    p.add_argument("--atlas", type=_existing, required=True, help="opaque atlas metadata")
    p.add_argument("--plan", type=_existing, help="plan whose regions go into the VPS")
    p.add_argument("--vps-id", type=int, default=0)
    p.add_argument("--precision", type=int, help="unit size bytes (default: smallest that fits)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mux)

    p = sub.add_parser("demux", help="split a V3C sample stream into unit payload files")
    p.add_argument("stream", type=_existing)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_demux)

    p = sub.add_parser("inspect", help="dump every syntax element with its bit offset")
    p.add_argument("file", type=_existing)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("qp-ladder", help="texture/geometry QP ladder of a test sequence")
    p.add_argument("--sequence", required=True, help="ClassroomVideo, Frog or Chess")
    p.set_defaults(func=cmd_qp_ladder)

    p = sub.add_parser("bdrate", help="BD-rate between two 'rate_bps,quality' files")
    p.add_argument("anchor", type=_existing)
    p.add_argument("test", type=_existing)
    p.add_argument("--figure", help="also plot both curves to this image file")
    p.set_defaults(func=cmd_bdrate)

    p = sub.add_parser("simulate", parents=[codec, grid], help="anchor vs packed pipeline report")
    p.add_argument("config", type=_existing, help="JSON pairs configuration")
    p.add_argument("--frames", type=int, help="override the configured frame count")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="directory for report.txt, report.csv and figures")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SUBPIC_PACK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except SubpicPackError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"error: INVALID_INPUT: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

import json
import subprocess
import sys

import pytest

from subpicpack.cli import main
from subpicpack.layout import PlacementPlan
from subpicpack.yuv import YuvFrame, read_yuv420, write_yuv420


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def workspace(tmp_path, capsys):
    regions = tmp_path / "regions.txt"
    regions.write_text("0 texture 128 128\n1 geometry 64 64\n")
    plan = tmp_path / "plan.txt"
    assert run(["plan", regions, "--ctu", 64, "--out", plan], capsys)[0] == 0
    parsed = PlacementPlan.from_text(plan.read_text())
    streams = []
    for p in parsed.placements:
        path = tmp_path / f"sub{p.subpic_id}.bit"
        code, _, err = run(["encode", "--subpic-id", p.subpic_id, "--width", p.ctu_w * 64,
                            "--height", p.ctu_h * 64, "--ctu", 64, "--id-len", 2, "--frames", 5,
                            "--intra-period", 3, "--key", 100 + p.region_id, "--out", path], capsys)
        assert code == 0, err
        streams.append(path)
    return tmp_path, plan, parsed, streams


def test_plan_output(workspace):
    _, plan, parsed, _ = workspace
    assert plan.read_text().startswith("plan ctu=64 width=128 height=192\n")
    assert len(parsed.fillers()) == 1


def test_plan_figure(tmp_path, capsys):
    regions = tmp_path / "r.txt"
    regions.write_text("0 texture 300 200\n1 geometry 150 100\n")
    fig = tmp_path / "plan.png"
    code, out, _ = run(["plan", regions, "--figure", fig], capsys)
    assert code == 0 and out.startswith("plan ctu=128")
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_merge_split_mux_demux(workspace, capsys):
    tmp, plan, parsed, streams = workspace
    merged = tmp / "merged.bit"
    assert run(["merge", plan, *streams, "--out", merged], capsys)[0] == 0
    for p, original in zip(parsed.placements, streams):
        out = tmp / f"split{p.subpic_id}.bit"
        assert run(["split", merged, "--subpic-id", p.subpic_id, "--out", out], capsys)[0] == 0
        assert out.read_bytes() == original.read_bytes()

    atlas = tmp / "atlas.bin"
    atlas.write_bytes(b"atlas")
    v3c = tmp / "out.v3c"
    assert run(["mux", "--video", merged, "--atlas", atlas, "--plan", plan, "--out", v3c], capsys)[0] == 0
    code, out, _ = run(["demux", v3c, "--out", tmp / "units"], capsys)
    assert code == 0
    assert (tmp / "units" / "02_pvd.bin").read_bytes() == merged.read_bytes()
    assert (tmp / "units" / "01_ad.bin").read_bytes() == b"atlas"
    assert "region 2 filler 64 128 64 64 0" in out


def test_inspect_both_formats(workspace, capsys):
    tmp, plan, _, streams = workspace
    code, out, _ = run(["inspect", streams[0]], capsys)
    assert code == 0
    assert "SPS" in out and "subpic_id" in out and "@" in out
    atlas = tmp / "a.bin"
    atlas.write_bytes(b"x")
    v3c = tmp / "o.v3c"
    run(["mux", "--video", streams[0], "--atlas", atlas, "--plan", plan, "--out", v3c], capsys)
    code, out, _ = run(["inspect", v3c], capsys)
    assert code == 0 and "VPS" in out and "region[0].region_id" in out


def test_split_unknown_subpic(workspace, capsys):
    tmp, plan, _, streams = workspace
    merged = tmp / "m.bit"
    run(["merge", plan, *streams, "--out", merged], capsys)
    code, _, err = run(["split", merged, "--subpic-id", 3, "--out", tmp / "x.bit"], capsys)
    assert code == 1
    assert err.startswith("error: UNKNOWN_SUBPIC_ID")


def test_merge_frame_mismatch(workspace, capsys):
    tmp, plan, parsed, streams = workspace
    p = parsed.placements[0]
    run(["encode", "--subpic-id", p.subpic_id, "--width", p.ctu_w * 64, "--height", p.ctu_h * 64,
         "--ctu", 64, "--id-len", 2, "--frames", 4, "--out", streams[0]], capsys)
    code, _, err = run(["merge", plan, *streams, "--out", tmp / "m.bit"], capsys)
    assert code == 1 and "FRAME_COUNT_MISMATCH" in err


def test_filler(tmp_path, capsys):
    out = tmp_path / "f.yuv"
    assert run(["filler", "--width", 8, "--height", 4, "--frames", 2, "--out", out], capsys)[0] == 0
    assert read_yuv420(out, 8, 4) == [YuvFrame.filled(8, 4, 128)] * 2


def test_qp_ladder(capsys):
    code, out, _ = run(["qp-ladder", "--sequence", "Chess"], capsys)
    assert code == 0
    assert out.splitlines()[-1].split()[-5:] == ["1", "1", "6", "11", "16"]
    code, _, err = run(["qp-ladder", "--sequence", "Nope"], capsys)
    assert code == 1 and "UNKNOWN_SEQUENCE" in err


def test_bdrate(tmp_path, capsys):
    anchor = tmp_path / "a.csv"
    test = tmp_path / "t.csv"
    anchor.write_text("rate_bps,psnr\n1e6,30\n2e6,33\n4e6,35.5\n8e6,37.5\n")
    test.write_text("rate_bps,psnr\n2e6,30\n4e6,33\n8e6,35.5\n16e6,37.5\n")
    fig = tmp_path / "rd.png"
    code, out, _ = run(["bdrate", anchor, test, "--figure", fig], capsys)
    assert code == 0 and out.strip() == "100.0000%"
    assert fig.stat().st_size > 0
    code, out, _ = run(["bdrate", anchor, anchor], capsys)
    assert code == 0 and out.strip() in ("0.0000%", "-0.0000%")
    test.write_text("1e6,30\n2e6,31\n")
    code, _, err = run(["bdrate", anchor, test], capsys)
    assert code == 1 and "DEGENERATE_CURVE" in err


def test_simulate(tmp_path, capsys):
    write_yuv420(tmp_path / "tex.yuv", [YuvFrame.filled(128, 128, 50 + i) for i in range(3)])
    config = tmp_path / "sim.json"
    config.write_text(json.dumps({
        "frames": 3, "fps": 30, "bitrate_mbps": 2,
        "pairs": [{"texture": [128, 128], "geometry": [64, 64], "texture_yuv": "tex.yuv"},
                  {"texture": [64, 64], "geometry": [64, 64]}],
    }))
    out = tmp_path / "report"
    code, text, err = run(["simulate", config, "--ctu", 64, "--out", out], capsys)
    assert code == 0, err
    assert "decoder ratio" in text and "overhead vs nominal rate" in text
    for name in ("report.txt", "report.csv", "comparison.png", "plan_00.png", "plan_01.txt"):
        assert (out / name).stat().st_size > 0
    assert (out / "report.csv").read_text().startswith("metric,value\n")


def test_console_script_entry_point(tmp_path):
    result = subprocess.run([sys.executable, "-m", "subpicpack", "qp-ladder", "--sequence", "Frog"],
                            capture_output=True, text=True, check=True)
    assert result.stdout.splitlines()[-1].split()[-5:] == ["10", "15", "20", "23", "27"]


def test_missing_file(capsys):
    with pytest.raises(SystemExit):
        main(["inspect", "/nonexistent/file"])


def test_commands_are_idempotent(workspace, capsys):
    tmp, plan, parsed, streams = workspace
    atlas = tmp / "atlas.bin"
    atlas.write_bytes(b"atlas")
    outputs = []
    for attempt in range(2):
        merged = tmp / f"merged{attempt}.bit"
        v3c = tmp / f"out{attempt}.v3c"
        assert run(["merge", plan, *streams, "--out", merged], capsys)[0] == 0
        assert run(["mux", "--video", merged, "--atlas", atlas, "--plan", plan, "--out", v3c], capsys)[0] == 0
        outputs.append((merged.read_bytes(), v3c.read_bytes()))
        for target in (merged, v3c, streams[0]):
            code, _, err = run(["inspect", target], capsys)
            assert code == 0, err
    assert outputs[0] == outputs[1]

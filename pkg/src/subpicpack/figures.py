"""Report figures.  Everything renders off-screen to files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .layout import RegionKind  # noqa: E402
from .rd_metrics import fit_log_rate, overlap_interval  # noqa: E402

KIND_COLOURS = {
    RegionKind.TEXTURE: "#4c72b0",
    RegionKind.GEOMETRY: "#55a868",
    RegionKind.FILLER: "#bbbbbb",
}

plt.rcParams.update({
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "figure.dpi": 110,
    "savefig.bbox": "tight",
})


def plot_plan(plan, path, title=None):
    fig, ax = plt.subplots(figsize=(4.5, 4.5 * plan.composite_h / max(plan.composite_w, 1)))
    ctu = plan.ctu_size
    for p in plan.placements:
        ax.add_patch(Rectangle((p.ctu_x * ctu, p.ctu_y * ctu), p.ctu_w * ctu, p.ctu_h * ctu,
                               facecolor=KIND_COLOURS[p.kind], edgecolor="k", lw=0.8))
        label = f"{p.kind.value}\nsubpic {p.subpic_id}"
        if p.rotation:
            label += f"\nrot {int(p.rotation)}"
        ax.text((p.ctu_x + p.ctu_w / 2) * ctu, (p.ctu_y + p.ctu_h / 2) * ctu, label,
                ha="center", va="center", fontsize=7)
    ax.set_xlim(0, plan.composite_w)
    ax.set_ylim(plan.composite_h, 0)
    ax.set_aspect("equal")
    ax.set_xticks(np.arange(0, plan.composite_w + 1, ctu), minor=True)
    ax.set_yticks(np.arange(0, plan.composite_h + 1, ctu), minor=True)
    ax.grid(which="minor", lw=0.2, color="w")
    ax.set_xlabel("luma x")
    ax.set_ylabel("luma y")
    ax.set_title(title or f"{plan.composite_w}x{plan.composite_h}, CTU {ctu}")
    fig.savefig(path)
    plt.close(fig)


def plot_rd_curves(anchor, test, path, bd=None, labels=("anchor", "test")):
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    lo, hi = overlap_interval(anchor, test)
    q = np.linspace(lo, hi, 200)
    for curve, label, marker in zip((anchor, test), labels, ("o", "s")):
        line, = ax.plot(curve.rates / 1e6, curve.qualities, marker, label=label)
        ax.plot(10 ** np.polyval(fit_log_rate(curve), q) / 1e6, q, "-", color=line.get_color(), lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("bitrate [Mbps]")
    ax.set_ylabel("quality")
    if bd is not None:
        ax.set_title(f"BD-rate {bd:+.2f}%")
    ax.legend()
    fig.savefig(path)
    plt.close(fig)


def plot_comparison(anchor, packed, path):
    fig, (left, right) = plt.subplots(1, 2, figsize=(6.5, 2.8))
    left.bar(["anchor", "packed"], [anchor.decoder_instances, packed.decoder_instances],
             color=["#8172b2", "#4c72b0"])
    left.set_ylabel("decoder instances")
    parts = {
        "content VCL": packed.total_vcl_bytes,
        "filler VCL": packed.filler_vcl_bytes,
        "param/SEI delta": packed.parameter_delta_bytes,
    }
    right.barh(list(parts), list(parts.values()), color=["#55a868", "#bbbbbb", "#c44e52"])
    right.set_xscale("symlog")
    right.set_xlabel("bytes")
    right.set_title(f"overhead {100 * packed.overhead_fraction:.3f}%")
    fig.savefig(path)
    plt.close(fig)

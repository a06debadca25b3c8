"""QP ladder, PSNR / WS-PSNR and Bjontegaard delta rate."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateCurve, DimensionMismatch, NoOverlap, QpOutOfRange, UnknownSequence

PSNR_CAP = 999.99

# Texture QPs per sequence, QP1..QP5, targeting 50/28/16/9/5 Mbps.
CTC_TEXTURE_QPS = {
    "ClassroomVideo": (25, 27, 30, 33, 38),
    "Frog": (30, 36, 43, 47, 51),
    "Chess": (11, 18, 25, 31, 38),
}
CTC_TARGET_MBPS = (50, 28, 16, 9, 5)


def _round_half_away(x: Fraction) -> int:
    n = math.floor(abs(x) + Fraction(1, 2))
    return n if x >= 0 else -n


def derive_geometry_qp(q: int) -> int:
    """Geometry QP paired with texture QP ``q``: round(max(1, -14.2 + 0.8 q))."""
    if isinstance(q, bool) or int(q) != q or not 0 <= q <= 63:
        raise QpOutOfRange(f"texture QP {q} outside 0..63")
    value = max(Fraction(1), Fraction(-142, 10) + Fraction(8, 10) * int(q))
    return _round_half_away(value)


@dataclass(frozen=True)
class QpLadder:
    sequence_name: str
    texture_qps: tuple[int, ...]
    geometry_qps: tuple[int, ...]

    def to_text(self) -> str:
        rows = [
            ["Target bitrate [Mbps]", *map(str, CTC_TARGET_MBPS)],
            ["QP index", *map(str, range(1, len(self.texture_qps) + 1))],
            [f"{self.sequence_name} texture", *map(str, self.texture_qps)],
            [f"{self.sequence_name} geometry", *map(str, self.geometry_qps)],
        ]
        first = max(len(r[0]) for r in rows)
        return "\n".join(r[0].ljust(first) + "".join(c.rjust(5) for c in r[1:]) for r in rows) + "\n"


def ctc_ladder(sequence: str) -> QpLadder:
    try:
        texture = CTC_TEXTURE_QPS[sequence]
    except KeyError:
        raise UnknownSequence(f"{sequence!r}; known: {', '.join(CTC_TEXTURE_QPS)}") from None
    return QpLadder(sequence, texture, tuple(derive_geometry_qp(q) for q in texture))


# -- PSNR ---------------------------------------------------------------------


def _planes(a, b, plane):
    if not isinstance(a, (list, tuple)):
        a = [a]
    if not isinstance(b, (list, tuple)):
        b = [b]
    if len(a) != len(b) or not a:
        raise DimensionMismatch(f"sequences of {len(a)} and {len(b)} frames")
    pa = [np.asarray(f.plane(plane), dtype=np.float64) for f in a]
    pb = [np.asarray(f.plane(plane), dtype=np.float64) for f in b]
    for x, y in zip(pa, pb):
        if x.shape != y.shape:
            raise DimensionMismatch(f"plane shapes {x.shape} and {y.shape}")
    return pa, pb


def _to_db(mse: float, peak: float) -> float:
    if mse == 0:
        return PSNR_CAP
    return 10 * math.log10(peak * peak / mse)


def psnr(a, b, plane: str = "y", peak: float = 255.0) -> float:
    """PSNR over whole sequences; MSE is averaged over every frame."""
    pa, pb = _planes(a, b, plane)
    mse = float(np.mean([np.mean((x - y) ** 2) for x, y in zip(pa, pb)]))
    return _to_db(mse, peak)


def ws_weights(height: int) -> np.ndarray:
    j = np.arange(height, dtype=np.float64)
    return np.cos((j + 0.5 - height / 2) * math.pi / height)


def ws_psnr(a, b, plane: str = "y", peak: float = 255.0) -> float:
    """Equirectangular WS-PSNR: squared errors weighted by cos(latitude) per row."""
    pa, pb = _planes(a, b, plane)
    mses = []
    for x, y in zip(pa, pb):
        w = ws_weights(x.shape[0])[:, None]
        mses.append(float(np.sum(w * (x - y) ** 2) / (np.sum(w) * x.shape[1])))
    return _to_db(float(np.mean(mses)), peak)


# -- BD-rate -----------------------------------------------------------------


@dataclass(frozen=True)
class RdCurve:
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(r), float(q)) for r, q in self.points)
        object.__setattr__(self, "points", pts)

    @property
    def rates(self) -> np.ndarray:
        return np.array([r for r, _ in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([q for _, q in self.points])

    def validate(self) -> None:
        if len(self.points) < 4:
            raise DegenerateCurve(f"BD-rate needs at least 4 points, got {len(self.points)}")
        rates, quals = self.rates, self.qualities
        if not np.all(np.isfinite(rates)) or not np.all(np.isfinite(quals)):
            raise DegenerateCurve("non-finite RD point")
        if np.any(rates <= 0):
            raise DegenerateCurve("bitrates must be positive")
        if np.any(np.diff(rates) <= 0):
            raise DegenerateCurve("bitrates must strictly increase")
        if np.any(np.diff(quals) <= 0):
            raise DegenerateCurve("quality must strictly increase with bitrate")

    @classmethod
    def from_csv(cls, text: str) -> "RdCurve":
        """Parse ``rate_bps,quality`` rows; blank lines, ``#`` comments and a
        non-numeric header row are skipped."""
        points = []
        for row in csv.reader(io.StringIO(text)):
            if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                continue
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError:
                if points:
                    raise
        return cls(tuple(points))

    def to_csv(self) -> str:
        return "rate_bps,quality\n" + "".join(f"{r:.17g},{q:.17g}\n" for r, q in self.points)


def fit_log_rate(curve: RdCurve) -> np.ndarray:
    """Cubic least-squares fit of log10(rate) against quality (highest power first)."""
    curve.validate()
    return np.polyfit(curve.qualities, np.log10(curve.rates), 3)


def overlap_interval(anchor: RdCurve, test: RdCurve) -> tuple[float, float]:
    lo = max(anchor.qualities.min(), test.qualities.min())
    hi = min(anchor.qualities.max(), test.qualities.max())
    if hi <= lo:
        raise NoOverlap(f"quality ranges do not overlap ({lo:.4g} >= {hi:.4g})")
    return float(lo), float(hi)


def mean_log_rate_difference(anchor: RdCurve, test: RdCurve) -> float:
    pa, pt = fit_log_rate(anchor), fit_log_rate(test)
    lo, hi = overlap_interval(anchor, test)
    ia, it = np.polyint(pa), np.polyint(pt)
    area_a = np.polyval(ia, hi) - np.polyval(ia, lo)
    area_t = np.polyval(it, hi) - np.polyval(it, lo)
    return float((area_t - area_a) / (hi - lo))


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average bitrate difference in percent at equal quality; positive
    means ``test`` needs more rate than ``anchor``."""
    return (10 ** mean_log_rate_difference(anchor, test) - 1) * 100

"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np


def ue_bits(value: int) -> str:
    """Exp-Golomb codeword as a '0'/'1' string, built from its definition."""
    code = bin(value + 1)[2:]
    return "0" * (len(code) - 1) + code


def u_bits(value: int, n: int) -> str:
    return format(value, f"0{n}b") if n else ""


def bits_to_bytes(bits: str) -> bytes:
    assert len(bits) % 8 == 0, len(bits)
    return bytes(int(bits[i:i + 8], 2) for i in range(0, len(bits), 8))


def align_bits(bits: str) -> str:
    bits += "1"
    return bits + "0" * (-len(bits) % 8)


def escape_reference(raw: bytes) -> bytes:
    """Byte-by-byte zero counter, straight from the escaping rule."""
    out = bytearray()
    zeros = 0
    for b in raw:
        if zeros >= 2 and b <= 3:
            out.append(3)
            zeros = 0
        out.append(b)
        zeros = zeros + 1 if b == 0 else 0
    return bytes(out)


def _fits(rects, box_w, box_h, allow_rotation):
    """Exact-cover style search: fill cells in raster order, either place a
    rectangle with its top-left corner on the first empty cell or waste it."""
    waste_budget = box_w * box_h - sum(w * h for w, h in rects)
    if waste_budget < 0:
        return False
    full = (1 << (box_w * box_h)) - 1

    shapes = []
    for w, h in rects:
        options = {(w, h)}
        if allow_rotation:
            options.add((h, w))
        masks = {}
        for ow, oh in options:
            if ow > box_w or oh > box_h:
                continue
            row = (1 << ow) - 1
            m = 0
            for dy in range(oh):
                m |= row << (dy * box_w)
            masks[(ow, oh)] = m
        shapes.append(masks)

    @lru_cache(maxsize=None)
    def search(occupied, remaining, waste):
        if not remaining:
            return True
        if occupied == full:
            return False
        cell = (~occupied & (occupied + 1)).bit_length() - 1
        cx, cy = cell % box_w, cell // box_w
        tried = set()
        for idx in remaining:
            key = (rects[idx], allow_rotation)
            if key in tried:
                continue
            tried.add(key)
            for (ow, oh), m in shapes[idx].items():
                if cx + ow > box_w or cy + oh > box_h:
                    continue
                placed = m << cell
                if occupied & placed:
                    continue
                rest = tuple(i for i in remaining if i != idx)
                if search(occupied | placed, rest, waste):
                    return True
        if waste > 0:
            return search(occupied | (1 << cell), remaining, waste - 1)
        return False

    return search(0, tuple(range(len(rects))), waste_budget)


def min_composite_area(rects, grid=None, allow_rotation=False):
    """Smallest W*H box holding every rectangle without overlap.

    ``rects`` are (w, h) in CTUs.  With ``grid`` set, only boxes with both
    sides <= grid are searched and None means nothing fits.
    """
    if grid is None:
        grid = sum(max(w, h) for w, h in rects)
    boxes = sorted(((w * h, w, h) for w in range(1, grid + 1) for h in range(1, grid + 1)))
    for area, w, h in boxes:
        if _fits(list(rects), w, h, allow_rotation):
            return area
    return None


def trapezoid_integral(f, lo, hi, n=400_001):
    """Composite trapezoid rule; ``f`` must accept a numpy array."""
    xs = np.linspace(lo, hi, n)
    ys = f(xs)
    return float((hi - lo) / (n - 1) * (ys.sum() - 0.5 * (ys[0] + ys[-1])))


def cubic_fit_reference(xs, ys):
    """Least-squares cubic solved exactly over the rationals via the normal
    equations.  Coefficients lowest power first."""
    xs = [Fraction(x) for x in xs]
    ys = [Fraction(y) for y in ys]
    m = [[sum(x ** (i + j) for x in xs) for j in range(4)] + [sum(y * x ** i for x, y in zip(xs, ys))]
         for i in range(4)]
    for col in range(4):
        pivot = next(r for r in range(col, 4) if m[r][col] != 0)
        m[col], m[pivot] = m[pivot], m[col]
        for r in range(4):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [a - f * b for a, b in zip(m[r], m[col])]
    return [float(m[i][4] / m[i][i]) for i in range(4)]


def bd_rate_reference(anchor, test):
    """BD-rate in percent from (rate, quality) point lists."""
    def fit(points):
        return cubic_fit_reference([q for _, q in points], [math.log10(r) for r, _ in points])

    ca, ct = fit(anchor), fit(test)
    lo = max(min(q for _, q in anchor), min(q for _, q in test))
    hi = min(max(q for _, q in anchor), max(q for _, q in test))

    def diff(x):
        return sum((b - a) * x ** k for k, (a, b) in enumerate(zip(ca, ct)))

    return (10 ** (trapezoid_integral(diff, lo, hi) / (hi - lo)) - 1) * 100


def geometry_qp_reference(q: int) -> int:
    """Integer arithmetic: q' = round(max(1, (8q - 142) / 10)), half away from zero."""
    tenths = max(10, 8 * q - 142)
    return (tenths + 5) // 10


def psnr_reference(a_rows, b_rows, peak=255):
    sq = [(x - y) ** 2 for ra, rb in zip(a_rows, b_rows) for x, y in zip(ra, rb)]
    mse = sum(sq) / len(sq)
    return 10 * math.log10(peak * peak / mse)

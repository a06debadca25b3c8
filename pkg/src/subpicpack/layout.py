"""Packing planner for the composite picture.

Regions are padded to the CTU grid and placed with a decreasing-height
shelf heuristic that reuses the space left under shorter regions.  Every candidate strip width between the
widest region and the sum of all widths is tried and the smallest composite
wins (ties go to the narrower strip).  Leftover rectangles become filler
regions, each one its own subpicture.

Plan text format, one header line then one placement per line, all
coordinates in CTU units::

    plan ctu=<ctu> width=<composite_w> height=<composite_h>
    <region_id> <kind> <ctu_x> <ctu_y> <ctu_w> <ctu_h> <rotation_degrees> <subpic_id>
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field


class RegionKind(str, enum.Enum):
    TEXTURE = "texture"
    GEOMETRY = "geometry"
    FILLER = "filler"


class Rotation(enum.IntEnum):
    R0 = 0
    R90 = 90


@dataclass(frozen=True)
class RegionSpec:
    kind: RegionKind
    width: int
    height: int
    region_id: int
    rotation: Rotation = Rotation.R0

    def __post_init__(self):
        object.__setattr__(self, "kind", RegionKind(self.kind))
        object.__setattr__(self, "rotation", Rotation(self.rotation))
        if self.width < 1 or self.height < 1:
            raise ValueError(f"region {self.region_id} has empty size {self.width}x{self.height}")


@dataclass(frozen=True)
class Placement:
    region_id: int
    kind: RegionKind
    ctu_x: int
    ctu_y: int
    ctu_w: int
    ctu_h: int
    rotation: Rotation
    subpic_id: int

    def cells(self):
        for y in range(self.ctu_y, self.ctu_y + self.ctu_h):
            for x in range(self.ctu_x, self.ctu_x + self.ctu_w):
                yield x, y


@dataclass(frozen=True)
class PlacementPlan:
    ctu_size: int
    composite_w: int
    composite_h: int
    placements: tuple[Placement, ...] = field(default_factory=tuple)

    @property
    def grid(self) -> tuple[int, int]:
        return self.composite_w // self.ctu_size, self.composite_h // self.ctu_size

    @property
    def area(self) -> int:
        return self.composite_w * self.composite_h

    def placement(self, region_id: int) -> Placement:
        for p in self.placements:
            if p.region_id == region_id:
                return p
        raise KeyError(region_id)

    def by_subpic(self, subpic_id: int) -> Placement:
        for p in self.placements:
            if p.subpic_id == subpic_id:
                return p
        raise KeyError(subpic_id)

    def content(self) -> list[Placement]:
        return [p for p in self.placements if p.kind != RegionKind.FILLER]

    def fillers(self) -> list[Placement]:
        return [p for p in self.placements if p.kind == RegionKind.FILLER]

    def check(self) -> None:
        """Raise ValueError unless placements tile the composite exactly once."""
        gw, gh = self.grid
        if gw * self.ctu_size != self.composite_w or gh * self.ctu_size != self.composite_h:
            raise ValueError("composite size is not a CTU multiple")
        seen = set()
        for p in self.placements:
            for cell in p.cells():
                if not (0 <= cell[0] < gw and 0 <= cell[1] < gh):
                    raise ValueError(f"region {p.region_id} leaves the composite at {cell}")
                if cell in seen:
                    raise ValueError(f"region {p.region_id} overlaps at CTU {cell}")
                seen.add(cell)
        if len(seen) != gw * gh:
            raise ValueError(f"placements cover {len(seen)} of {gw * gh} CTUs")

    def to_text(self) -> str:
        lines = [f"plan ctu={self.ctu_size} width={self.composite_w} height={self.composite_h}"]
        for p in self.placements:
            lines.append(f"{p.region_id} {p.kind.value} {p.ctu_x} {p.ctu_y} "
                         f"{p.ctu_w} {p.ctu_h} {int(p.rotation)} {p.subpic_id}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PlacementPlan":
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or rows[0][0] != "plan":
            raise ValueError("plan text must start with a 'plan ctu=.. width=.. height=..' line")
        head = dict(item.split("=", 1) for item in rows[0][1:])
        placements = []
        for row in rows[1:]:
            if len(row) != 8:
                raise ValueError(f"placement line needs 8 fields: {' '.join(row)}")
            rid, kind, x, y, w, h, rot, sid = row
            placements.append(Placement(int(rid), RegionKind(kind), int(x), int(y), int(w), int(h),
                                        Rotation(int(rot)), int(sid)))
        plan = cls(int(head["ctu"]), int(head["width"]), int(head["height"]), tuple(placements))
        plan.check()
        return plan


def pad_to_grid(w: int, h: int, ctu: int) -> tuple[int, int]:
    if w < 1 or h < 1 or ctu < 1 or ctu & (ctu - 1):
        raise ValueError(f"bad pad request {w}x{h} on CTU {ctu}")
    return ctu * -(-w // ctu), ctu * -(-h // ctu)


def _ctu_dims(region: RegionSpec, ctu: int, rotation: Rotation) -> tuple[int, int]:
    w, h = pad_to_grid(region.width, region.height, ctu)
    if rotation == Rotation.R90:
        w, h = h, w
    return w // ctu, h // ctu


def _shelf_pack(items, strip_w):
    """items: (region_id, w, h, rotation) in CTUs.  Returns (height, placed, gaps).

    A shelf is opened as one free rectangle of the full strip width.  Placing
    a region at the top-left of a free rectangle leaves the part to its right
    at full height and the part below it at the region's width, so shorter
    regions may later drop into the space under a shorter neighbour.
    """
    order = sorted(items, key=lambda it: (-it[2], -it[1], it[0]))
    placed, free = [], []
    height = 0
    for rid, w, h, rot in order:
        slot = next((f for f in sorted(free, key=lambda f: (f[1], f[0]))
                     if f[2] >= w and f[3] >= h), None)
        if slot is None:
            slot = (0, height, strip_w, h)
            height += h
        else:
            free.remove(slot)
        fx, fy, fw, fh = slot
        placed.append((rid, fx, fy, w, h, rot))
        if fw > w:
            free.append((fx + w, fy, fw - w, fh))
        if fh > h:
            free.append((fx, fy + h, w, fh - h))
    return height, placed, _merge_free(free)


def _merge_free(free):
    rects = sorted(free, key=lambda f: (f[1], f[0]))
    merged = True
    while merged:
        merged = False
        for i, a in enumerate(rects):
            for j, b in enumerate(rects):
                if i == j:
                    continue
                if a[1] == b[1] and a[3] == b[3] and a[0] + a[2] == b[0]:
                    joined = (a[0], a[1], a[2] + b[2], a[3])
                elif a[0] == b[0] and a[2] == b[2] and a[1] + a[3] == b[1]:
                    joined = (a[0], a[1], a[2], a[3] + b[3])
                else:
                    continue
                rects = [r for k, r in enumerate(rects) if k not in (i, j)] + [joined]
                rects.sort(key=lambda f: (f[1], f[0]))
                merged = True
                break
            if merged:
                break
    return rects


def _best_shelf(items):
    widths = [w for _, w, _, _ in items]
    tallest = max(h for _, _, h, _ in items)
    best = None
    for strip_w in range(max(widths), sum(widths) + 1):
        if best is not None and strip_w * tallest >= best[0][0]:
            break  # every wider strip is at least this large
        height, placed, gaps = _shelf_pack(items, strip_w)
        key = (strip_w * height, strip_w)
        if best is None or key < best[0]:
            best = (key, strip_w, height, placed, gaps)
    return best


def plan_packing(regions, ctu: int, allow_rotation: bool = False) -> PlacementPlan:
    """Place ``regions`` in one composite picture on a ``ctu`` grid.

    With ``allow_rotation`` every orientation combination is evaluated (a
    greedy per-region pass above 10 regions) and the smallest composite is
    kept; ties prefer fewer rotated regions, so rotation never enlarges the
    composite.  Subpicture ids follow placement order, fillers last.
    """
    regions = list(regions)
    if not regions:
        raise ValueError("nothing to pack")
    if any(r.kind == RegionKind.FILLER for r in regions):
        raise ValueError("filler regions are produced by the planner, not supplied to it")
    if len({r.region_id for r in regions}) != len(regions):
        raise ValueError("region ids must be distinct")
    pad_to_grid(1, 1, ctu)

    def evaluate(rotations):
        items = [(r.region_id, *_ctu_dims(r, ctu, rot), rot) for r, rot in zip(regions, rotations)]
        return _best_shelf(items)

    def score(result, rotations):
        return result[0], sum(1 for rot in rotations if rot == Rotation.R90)

    rotations = [Rotation.R0] * len(regions)
    best = evaluate(rotations)
    if allow_rotation:
        turnable = [i for i, r in enumerate(regions)
                    if _ctu_dims(r, ctu, Rotation.R0)[0] != _ctu_dims(r, ctu, Rotation.R0)[1]]
        if len(turnable) <= 10:
            candidates = (
                [Rotation.R90 if i in chosen else Rotation.R0 for i in range(len(regions))]
                for k in range(1, len(turnable) + 1)
                for chosen in itertools.combinations(turnable, k)
            )
            best_score = score(best, rotations)
            for cand in candidates:
                result = evaluate(cand)
                if score(result, cand) < best_score:
                    best, rotations, best_score = result, cand, score(result, cand)
        else:
            for i in turnable:
                cand = list(rotations)
                cand[i] = Rotation.R90
                result = evaluate(cand)
                if result[0][0] < best[0][0]:
                    best, rotations = result, cand

    _, strip_w, height, placed, gaps = best
    kinds = {r.region_id: r.kind for r in regions}
    placements = [Placement(rid, kinds[rid], x, y, w, h, rot, sid)
                  for sid, (rid, x, y, w, h, rot) in enumerate(placed)]
    next_id = max(kinds) + 1
    for x, y, w, h in gaps:
        placements.append(Placement(next_id, RegionKind.FILLER, x, y, w, h, Rotation.R0, len(placements)))
        next_id += 1
    plan = PlacementPlan(ctu, strip_w * ctu, height * ctu, tuple(placements))
    plan.check()
    return plan


def filler_area(plan: PlacementPlan) -> int:
    ctu2 = plan.ctu_size * plan.ctu_size
    return sum(p.ctu_w * p.ctu_h * ctu2 for p in plan.fillers())


def read_regions(text: str) -> list[RegionSpec]:
    """Parse a regions file: ``<region_id> <kind> <width> <height>`` per line."""
    regions = []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        rid, kind, w, h = ln.split()
        regions.append(RegionSpec(RegionKind(kind), int(w), int(h), int(rid)))
    return regions

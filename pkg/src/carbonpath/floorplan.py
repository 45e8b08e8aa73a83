"""Recursive balanced-bipartition slicing floorplanner.

Dies are square.  The tree is built top-down (balanced area split, cut
direction alternating from vertical), then sized bottom-up: a vertical cut
places its children side by side, a horizontal cut stacks them.  The taller
child of a vertical cut goes on the left and the wider child of a horizontal
cut goes on the bottom, with everything anchored bottom-left.  That keeps a
die in the bottom-left, bottom-right and top-left corner of every sub-block,
which in turn guarantees the two halves of each cut touch, so the contact
adjacency graph is always connected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

EPS = 1e-9


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Floorplan:
    rects: tuple[Rect, ...]
    width: float
    height: float
    adjacency: tuple[tuple[int, int], ...]

    @property
    def bbox_area(self) -> float:
        return self.width * self.height

    @property
    def white_space_mm2(self) -> float:
        return max(0.0, self.bbox_area - sum(r.area for r in self.rects))

    def neighbors(self, idx: int) -> list[int]:
        return sorted({b for a, b in self.adjacency if a == idx} | {a for a, b in self.adjacency if b == idx})

    def to_dict(self) -> dict:
        return {"width_mm": self.width, "height_mm": self.height,
                "rects": [{"x": r.x, "y": r.y, "w": r.w, "h": r.h} for r in self.rects],
                "adjacency": [list(e) for e in self.adjacency]}


def _imbalance(areas: Sequence[float], left: Sequence[int], members: Sequence[int]) -> float:
    s_left = sum(areas[i] for i in left)
    s_all = sum(areas[i] for i in members)
    return round(abs(2 * s_left - s_all), 9)


def balanced_split(areas: Sequence[float], members: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split ``members`` into two non-empty groups with the closest area sums.

    Ties prefer fewer members on the left, then the lexicographically
    smallest left index tuple.
    """
    members = tuple(members)
    best_key, best_left = None, None
    for size in range(1, len(members)):
        for left in itertools.combinations(members, size):
            key = (_imbalance(areas, left, members), size, left)
            if best_key is None or key < best_key:
                best_key, best_left = key, left
    right = tuple(i for i in members if i not in best_left)
    return best_left, right


def _layout(areas, members, depth):
    """Return (width, height, {index: (x, y, w, h)}) of a sub-block at the origin."""
    if len(members) == 1:
        side = math.sqrt(areas[members[0]])
        return side, side, {members[0]: (0.0, 0.0, side, side)}
    left, right = balanced_split(areas, members)
    a = _layout(areas, left, depth + 1)
    b = _layout(areas, right, depth + 1)
    placed = {}
    if depth % 2 == 0:  # vertical cut: side by side, taller block first
        first, second = (a, b) if a[1] >= b[1] else (b, a)
        placed.update(first[2])
        placed.update({i: (x + first[0], y, w, h) for i, (x, y, w, h) in second[2].items()})
        return first[0] + second[0], max(first[1], second[1]), placed
    first, second = (a, b) if a[0] >= b[0] else (b, a)  # horizontal cut: wider block at the bottom
    placed.update(first[2])
    placed.update({i: (x, y + first[1], w, h) for i, (x, y, w, h) in second[2].items()})
    return max(first[0], second[0]), first[1] + second[1], placed


def _touching(r: Rect, s: Rect) -> bool:
    """True when two rectangles share a boundary segment of positive length."""
    if abs(r.x + r.w - s.x) < EPS or abs(s.x + s.w - r.x) < EPS:
        return min(r.y + r.h, s.y + s.h) - max(r.y, s.y) > EPS
    if abs(r.y + r.h - s.y) < EPS or abs(s.y + s.h - r.y) < EPS:
        return min(r.x + r.w, s.x + s.w) - max(r.x, s.x) > EPS
    return False


def contact_adjacency(rects: Sequence[Rect]) -> tuple[tuple[int, int], ...]:
    return tuple((a, b) for a, b in itertools.combinations(range(len(rects)), 2) if _touching(rects[a], rects[b]))


def slicing_floorplan(areas: Sequence[float]) -> Floorplan:
    if not areas:
        raise ValueError("floorplan needs at least one chiplet")
    if any(a <= 0 for a in areas):
        raise ValueError("chiplet areas must be positive")
    width, height, placed = _layout(list(areas), tuple(range(len(areas))), 0)
    rects = tuple(Rect(*placed[i]) for i in range(len(areas)))
    return Floorplan(rects, width, height, contact_adjacency(rects))


def footprint_area(integration: str, areas: Sequence[float], stacks: Sequence[Sequence[int]],
                   floorplan: Floorplan | None = None) -> float:
    """Package footprint in mm^2.

    ``stacks`` lists the placement sites; each site is a tuple of chiplet
    indices, base die first.  2.5D-style footprints come from a floorplan of
    the site base dies.
    """
    if integration == "2D":
        return float(areas[stacks[0][0]])
    if integration == "3D":
        return float(areas[stacks[0][0]])
    if floorplan is None:
        floorplan = slicing_floorplan([areas[site[0]] for site in stacks])
    return floorplan.bbox_area

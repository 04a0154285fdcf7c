"""Cross-region merging of recurring patterns and the normalized detected
layout."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyDetection
from .recurpat import EMPTY, RecurringPattern


@dataclass
class MergedPattern:
    """Union of same-type patterns whose circles overlap.

    ``circles`` is ``(n, 3)`` rows of ``(x, y, r)`` in scene pixels;
    ``members[i]`` are the keypoint ids behind circle ``i``.
    """

    type_id: str
    circles: np.ndarray
    members: list = field(default_factory=list)
    sources: list = field(default_factory=list)

    @property
    def source_regions(self) -> tuple:
        return tuple(sorted({p.source_region for p in self.sources}))

    def __len__(self):
        return len(self.circles)


@dataclass
class DetectedLayout:
    """Detected object centres normalized to their joint bounding box.

    ``point_sets[j]`` holds the normalized centres of merged pattern ``j``;
    ``pixel_sets[j]`` the same centres in scene pixels.
    """

    point_sets: list
    pixel_sets: list
    bbox: tuple
    width_box: float
    height_box: float
    patterns: list
    provenance: list

    @property
    def N(self) -> int:
        return len(self.point_sets)


def circles_overlap(a, b) -> bool:
    return float(np.hypot(a[0] - b[0], a[1] - b[1])) < a[2] + b[2]


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, i):
        while self.p[i] != i:
            self.p[i] = self.p[self.p[i]]
            i = self.p[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[max(ra, rb)] = min(ra, rb)

    def groups(self):
        out: dict[int, list[int]] = {}
        for i in range(len(self.p)):
            out.setdefault(self.find(i), []).append(i)
        return list(out.values())


def _object_members(p: RecurringPattern) -> list:
    if hasattr(p, "members"):
        return [tuple(m) for m in p.members]
    cells = p.matrix.cells
    return [tuple(sorted(int(k) for k in cells[:, o] if k != EMPTY)) for o in range(cells.shape[1])]


def _pattern_sort_key(p):
    ids = p.keypoint_ids()
    return (p.type_id or "", p.source_region, int(ids.min()) if len(ids) else -1)


def _any_overlap(ca: np.ndarray, cb: np.ndarray) -> bool:
    d = np.hypot(ca[:, None, 0] - cb[None, :, 0], ca[:, None, 1] - cb[None, :, 1])
    return bool((d < ca[:, None, 2] + cb[None, :, 2]).any())


def merge_patterns(patterns, type_map: Optional[dict] = None) -> list[MergedPattern]:
    """Union same-type patterns from different regions when any pair of
    their circles overlaps (transitively), then combine overlapping circles
    from different source patterns into one (centre = mean, radius = max).
    Patterns of different types are never merged.
    """
    def type_of(p):
        if type_map is not None:
            return type_map[p.source_region]
        return p.type_id

    pats = sorted(patterns, key=_pattern_sort_key)
    by_type: dict[str, list] = {}
    for p in pats:
        by_type.setdefault(type_of(p), []).append(p)

    merged = []
    for t in sorted(by_type):
        group = by_type[t]
        dsu = _DSU(len(group))
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                if group[a].source_region == group[b].source_region:
                    continue
                if _any_overlap(np.asarray(group[a].circles), np.asarray(group[b].circles)):
                    dsu.union(a, b)
        for comp in dsu.groups():
            srcs = [group[i] for i in comp]
            circ, mem, owner = [], [], []
            for si, p in enumerate(srcs):
                for c, m in zip(np.asarray(p.circles), _object_members(p)):
                    circ.append(c)
                    mem.append(m)
                    owner.append(si)
            circ = np.asarray(circ, dtype=float).reshape(-1, 3)
            cd = _DSU(len(circ))
            for a in range(len(circ)):
                for b in range(a + 1, len(circ)):
                    if owner[a] != owner[b] and circles_overlap(circ[a], circ[b]):
                        cd.union(a, b)
            out_c, out_m = [], []
            for cc in cd.groups():
                block = circ[sorted(cc, key=lambda i: (circ[i, 1], circ[i, 0], circ[i, 2]))]
                out_c.append((block[:, 0].mean(), block[:, 1].mean(), block[:, 2].max()))
                out_m.append(tuple(sorted(set().union(*[mem[i] for i in cc]))))
            order = sorted(range(len(out_c)), key=lambda i: (out_c[i][1], out_c[i][0], out_m[i]))
            merged.append(MergedPattern(
                t,
                np.asarray([out_c[i] for i in order], dtype=float).reshape(-1, 3),
                [out_m[i] for i in order],
                srcs,
            ))
    merged.sort(key=lambda m: (m.type_id, -len(m), tuple(m.circles[0][:2]) if len(m) else ()))
    return merged


def normalize(merged: list, min_side: float = 1.0) -> DetectedLayout:
    """Map every object centre into the bounding box of all centres:
    top-left -> (0, 0), bottom-right -> (1, 1).

    A box side shorter than ``min_side`` pixels is degenerate and widened to
    ``min_side`` around the data. With ``min_side`` set to a fraction of the
    product size, a single shelf row normalizes to y ~ 0.5 instead of
    stretching position jitter over [0, 1]."""
    min_side = max(float(min_side), 1.0)
    centers = [np.asarray(m.circles, dtype=float)[:, :2] for m in merged]
    if not merged or sum(len(c) for c in centers) == 0:
        raise EmptyDetection("no detected objects to normalize")
    allc = np.vstack([c for c in centers if len(c)])
    x0, y0 = allc.min(axis=0)
    x1, y1 = allc.max(axis=0)
    if x1 - x0 < min_side:
        cx = (x0 + x1) / 2.0
        x0, x1 = cx - min_side / 2.0, cx + min_side / 2.0
    if y1 - y0 < min_side:
        cy = (y0 + y1) / 2.0
        y0, y1 = cy - min_side / 2.0, cy + min_side / 2.0
    w, h = x1 - x0, y1 - y0
    points = [(c - (x0, y0)) / (w, h) for c in centers]
    prov = [[(j, i) for i in range(len(c))] for j, c in enumerate(centers)]
    return DetectedLayout(points, centers, (float(x0), float(y0), float(x1), float(y1)),
                          float(w), float(h), list(merged), prov)

"""Per-type search regions projected from planogram boxes onto the scene."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .planogram import Box, ExpectedLayout, Planogram


@dataclass(frozen=True)
class PartitionConfig:
    max_per_region: int = 25
    margin_frac: float = 0.25

    def __post_init__(self):
        if self.max_per_region < 2:
            raise ValueError("max_per_region must be at least 2")
        if self.margin_frac < 0:
            raise ValueError("margin_frac must be nonnegative")


@dataclass(frozen=True)
class SearchRegion:
    """A pixel rectangle in which one product type is searched.

    ``slot_size`` is the smallest (width, height) of the product boxes
    assigned to the region, used as an object size prior by detection.
    ``slots`` are the ``(row, col)`` planogram slots assigned to it.
    ``home`` holds the pixel boxes of every product of the region's type,
    including those assigned to sibling regions of the same type.
    """

    type_id: str
    rect: Box
    expected_count: int
    region_index: int
    slot_size: Optional[tuple[float, float]] = None
    slots: tuple = ()
    home: tuple = ()

    def contains(self, xy: np.ndarray) -> np.ndarray:
        x0, y0, x1, y1 = self.rect
        return (xy[:, 0] >= x0) & (xy[:, 0] <= x1) & (xy[:, 1] >= y0) & (xy[:, 1] <= y1)

    def at_home(self, xy: np.ndarray) -> np.ndarray:
        """Points inside one of the region's own product boxes."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if not self.home:
            return np.zeros(len(xy), bool)
        b = np.asarray(self.home, dtype=float)
        x, y = xy[:, 0, None], xy[:, 1, None]
        return ((x >= b[:, 0]) & (x <= b[:, 2]) & (y >= b[:, 1]) & (y <= b[:, 3])).any(axis=1)


def _split_sizes(n: int, groups: int) -> list[int]:
    base, extra = divmod(n, groups)
    return [base + 1 if g < extra else base for g in range(groups)]


def _cover(boxes) -> Box:
    return Box(min(b.x0 for b in boxes), min(b.y0 for b in boxes),
               max(b.x1 for b in boxes), max(b.y1 for b in boxes))


def _expand_clip(box: Box, margin: float, W: float, H: float) -> Box:
    mx, my = margin * box.width, margin * box.height
    x0, y0 = max(0.0, box.x0 - mx), max(0.0, box.y0 - my)
    x1, y1 = min(float(W), box.x1 + mx), min(float(H), box.y1 + my)
    # zero-area regions grow to 1 px, kept inside the scene where possible
    if x1 - x0 < 1.0:
        c = min(max((x0 + x1) / 2.0, 0.5), W - 0.5)
        x0, x1 = c - 0.5, c + 0.5
    if y1 - y0 < 1.0:
        c = min(max((y0 + y1) / 2.0, 0.5), H - 0.5)
        y0, y1 = c - 0.5, c + 0.5
    return Box(x0, y0, x1, y1)


def partition(layout: ExpectedLayout, planogram: Planogram, scene_dims, cfg=None) -> list[SearchRegion]:
    """Group each type's product boxes into at most ``max_per_region``-sized
    search regions.

    A type whose count exceeds the cap is split along the longer axis of its
    covering rectangle into ``ceil(count / cap)`` contiguous groups of
    near-equal size. Each region is its group's covering rectangle grown by
    ``margin_frac`` of its own width/height per side, then clipped.
    """
    cfg = cfg or PartitionConfig()
    W, H = scene_dims
    if W <= 0 or H <= 0:
        raise ValueError("scene dimensions must be positive")

    boxes: dict[str, list] = {t: [] for t in layout.point_sets}
    for t, r, c, box in planogram.slots():
        boxes.setdefault(t, []).append(((r, c), box.scaled(W, H)))

    regions = []
    for t in sorted(boxes):
        items = boxes[t]
        if not items:
            continue
        n = len(items)
        groups = -(-n // cfg.max_per_region)
        cover = _cover([b for _, b in items])
        axis = 0 if cover.width >= cover.height else 1
        order = sorted(range(n), key=lambda i: (items[i][1].center[axis], i))
        home = tuple(b for _, b in items)
        start = 0
        for size in _split_sizes(n, groups):
            chosen = [items[i] for i in sorted(order[start:start + size])]
            start += size
            gboxes = [b for _, b in chosen]
            rect = _expand_clip(_cover(gboxes), cfg.margin_frac, W, H)
            slot = (min(b.width for b in gboxes), min(b.height for b in gboxes))
            regions.append(SearchRegion(t, rect, size, len(regions), slot,
                                        tuple(s for s, _ in chosen), home))
    return regions

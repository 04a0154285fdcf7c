"""Product exemplars and re-detection of instances missed by the
region-restricted search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .merging import MergedPattern
from .recurpat import EMPTY, RecurringPattern, _fit_objects, object_circle


@dataclass(frozen=True)
class RedetectConfig:
    tau_a: float = 0.35
    tau_g: float = 0.15
    theta: float = 0.6
    min_words: int = 3

    def __post_init__(self):
        if not 0 < self.theta <= 1:
            raise ValueError("theta must be in (0, 1]")


@dataclass
class ProductExemplar:
    type_id: str
    bbox: tuple
    keypoint_ids: np.ndarray
    positions: np.ndarray
    descriptors: np.ndarray

    @property
    def n_features(self) -> int:
        return len(self.keypoint_ids)

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0) * (y1 - y0)

    def to_dict(self) -> dict:
        return {"type": self.type_id, "bbox": [float(v) for v in self.bbox],
                "features": self.n_features}


def _bbox(pts) -> tuple:
    return (float(pts[:, 0].min()), float(pts[:, 1].min()),
            float(pts[:, 0].max()), float(pts[:, 1].max()))


def _columns(pattern) -> list[np.ndarray]:
    if isinstance(pattern, MergedPattern):
        cols = []
        for src in pattern.sources:
            cols.extend(_columns(src))
        return cols
    cells = pattern.matrix.cells
    return [cells[:, o][cells[:, o] != EMPTY] for o in range(cells.shape[1])]


def extract_exemplar(pattern, type_id: str, scene) -> ProductExemplar:
    """The object with the most filled cells; ties go to the smaller
    bounding box, then to the lowest keypoint id."""
    cols = [np.asarray(c, dtype=int) for c in _columns(pattern) if len(c)]
    if not cols:
        raise ValueError("pattern has no objects")

    def key(c):
        x0, y0, x1, y1 = _bbox(scene.positions[c])
        return (-len(c), (x1 - x0) * (y1 - y0), int(c.min()))

    best = min(cols, key=key)
    pts = scene.positions[best]
    return ProductExemplar(type_id, _bbox(pts), best.copy(), pts.copy(),
                           scene.descriptors[best].copy())


def _outside(xy: np.ndarray, circles) -> np.ndarray:
    circles = np.asarray(circles, dtype=float).reshape(-1, 3)
    if not len(circles):
        return np.ones(len(xy), bool)
    d = np.hypot(xy[:, None, 0] - circles[None, :, 0], xy[:, None, 1] - circles[None, :, 1])
    return (d >= circles[None, :, 2]).all(axis=1)


def _overlaps_any(c, circles) -> bool:
    circles = np.asarray(circles, dtype=float).reshape(-1, 3)
    if not len(circles):
        return False
    d = np.hypot(circles[:, 0] - c[0], circles[:, 1] - c[1])
    return bool((d < circles[:, 2] + c[2]).any())


def redetect(exemplar: ProductExemplar, scene, exclude, cfg: RedetectConfig = RedetectConfig()) -> list[tuple]:
    """Find further instances of ``exemplar`` among keypoints outside every
    excluded circle.

    Each keypoint similar to some exemplar feature anchors a hypothesis; the
    other exemplar features are predicted by translation and matched to the
    nearest similar free keypoint. A hypothesis is kept if at least
    ``theta`` of the exemplar features are matched and the matched layout
    fits the exemplar by translation + scale with relative RMS residual at
    most ``tau_g``. Accepted instances are taken greedily, best first, and
    never overlap excluded or previously accepted circles.
    """
    k = exemplar.n_features
    if k < cfg.min_words or len(scene) == 0:
        return []
    E = exemplar.positions
    free = np.nonzero(_outside(scene.positions, exclude))[0]
    if not len(free):
        return []
    X = scene.positions[free]
    dd = np.linalg.norm(scene.descriptors[free][:, None, :] - exemplar.descriptors[None], axis=-1)
    sim = dd <= cfg.tau_a  # (n_free, k)
    if not sim.any():
        return []
    ex_radius = object_circle(E)[2]
    tol = max(0.5 * ex_radius, 1.0)
    need = int(np.ceil(cfg.theta * k - 1e-9))

    hyps = []
    for q, f in zip(*np.nonzero(sim)):
        t = X[q] - E[f]
        pred = E + t
        match = np.full(k, -1)
        for g in range(k):
            cand = np.nonzero(sim[:, g])[0]
            if not len(cand):
                continue
            d = np.hypot(X[cand, 0] - pred[g, 0], X[cand, 1] - pred[g, 1])
            b = int(np.argmin(d))
            if d[b] <= tol:
                match[g] = cand[b]
        match[f] = q
        ok = match >= 0
        # one keypoint per exemplar feature
        _, first = np.unique(match[ok], return_index=True)
        keep = np.zeros(k, bool)
        keep[np.nonzero(ok)[0][first]] = True
        n = int(keep.sum())
        if n < need:
            continue
        s, _, rms = _fit_objects(E, X[match], keep)
        radius = object_circle(X[match[keep]])[2]
        rel = float(rms) / radius
        if rel > cfg.tau_g:
            continue
        hyps.append((-n, rel, int(free[q]), match.copy(), keep.copy()))

    hyps.sort(key=lambda h: h[:3])
    used = np.zeros(len(free), bool)
    found: list[tuple] = []
    for _, _, _, match, keep in hyps:
        idx = match[keep]
        if used[idx].any():
            continue
        c = object_circle(X[idx])
        if _overlaps_any(c, exclude) or _overlaps_any(c, found):
            continue
        used[idx] = True
        found.append(c)
    return found

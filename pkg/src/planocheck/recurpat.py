"""Recurring pattern detection inside one search region.

A pattern is a word x object feature-assignment matrix: each row (visual
word) holds one keypoint per object with mutually similar descriptors, each
column (visual object) holds one product instance whose point layout agrees
with the pattern's mean layout up to translation and uniform scale.

Detection maximizes coverage (#words x #objects) subject to

* appearance: max pairwise descriptor distance within a word <= ``tau_a``
* geometry: RMS residual of the translation+scale fit of an object to the
  mean layout, divided by the object radius, <= ``tau_g``

with GRASP: randomized seeds from a restricted candidate list of similar
keypoint pairs, greedy growth by add-column / add-row moves, then local
search with modify-entry and delete+regrow moves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .partition import SearchRegion

EMPTY = -1


@dataclass(frozen=True)
class GraspConfig:
    tau_a: float = 0.35
    tau_g: float = 0.15
    restarts: int = 30
    restarts_per_round: int = 5
    rcl_alpha: float = 0.3
    max_local_moves: int = 200
    min_objects: int = 2
    min_words: int = 3
    min_row_fill: float = 0.5
    max_extent: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.tau_a <= 0 or self.tau_g <= 0:
            raise ValueError("tau_a and tau_g must be positive")
        if not 0 <= self.rcl_alpha <= 1:
            raise ValueError("rcl_alpha must be in [0, 1]")
        if self.min_objects < 2 or self.min_words < 1:
            raise ValueError("min_objects must be >= 2 and min_words >= 1")
        if not 0 <= self.min_row_fill <= 1 or self.max_extent <= 0:
            raise ValueError("min_row_fill must be in [0, 1] and max_extent positive")


@dataclass
class AssignmentMatrix:
    """``cells[w, o]`` is a scene keypoint id or ``EMPTY``."""

    cells: np.ndarray
    points: np.ndarray = field(repr=False)
    word_descriptors: np.ndarray = field(repr=False)

    @classmethod
    def from_cells(cls, cells, positions, descriptors):
        cells = np.asarray(cells, dtype=int)
        R, C = cells.shape
        pts = np.full((R, C, 2), np.nan)
        filled = cells != EMPTY
        pts[filled] = positions[cells[filled]]
        means = np.zeros((R, descriptors.shape[1]))
        for w in range(R):
            ids = cells[w][cells[w] != EMPTY]
            if len(ids):
                means[w] = descriptors[ids].mean(axis=0)
        return cls(cells, pts, means)

    @property
    def shape(self):
        return self.cells.shape

    @property
    def n_words(self) -> int:
        return self.cells.shape[0]

    @property
    def n_objects(self) -> int:
        return self.cells.shape[1]

    @property
    def coverage(self) -> int:
        return self.n_words * self.n_objects

    def keypoint_ids(self) -> np.ndarray:
        return np.sort(self.cells[self.cells != EMPTY])

    def column(self, o: int) -> np.ndarray:
        c = self.cells[:, o]
        return c[c != EMPTY]


@dataclass
class RecurringPattern:
    matrix: AssignmentMatrix
    circles: np.ndarray
    source_region: int
    type_id: Optional[str] = None

    @property
    def coverage(self) -> int:
        return self.matrix.coverage

    def keypoint_ids(self) -> np.ndarray:
        return self.matrix.keypoint_ids()


# --------------------------------------------------------------------------
# geometry helpers


def object_circle(points) -> tuple[float, float]:
    """Circle for one object: centre = mean position, radius = half the mean
    of the bounding-box width and height, sides floored at 1 px."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    cx, cy = pts.mean(axis=0)
    w = max(float(np.ptp(pts[:, 0])), 1.0)
    h = max(float(np.ptp(pts[:, 1])), 1.0)
    return float(cx), float(cy), 0.5 * (w + h) / 2.0


def circles_of(matrix: AssignmentMatrix) -> np.ndarray:
    out = np.zeros((matrix.n_objects, 3))
    for o in range(matrix.n_objects):
        col = matrix.points[:, o]
        out[o] = object_circle(col[~np.isnan(col[:, 0])])
    return out


def _fit_objects(L, pts, mask):
    """Least-squares translation + uniform scale of each object onto layout L.

    L: (R, 2); pts: (..., R, 2) with mask (..., R). Returns s, t, rms.
    """
    m = mask.astype(float)
    n = np.maximum(m.sum(axis=-1), 1.0)
    x = np.where(mask[..., None], pts, 0.0)
    Lb = (m[..., None] * L).sum(axis=-2) / n[..., None]
    xb = x.sum(axis=-2) / n[..., None]
    Lc = (L - Lb[..., None, :]) * m[..., None]
    xc = (x - xb[..., None, :]) * m[..., None]
    num = (Lc * xc).sum(axis=(-2, -1))
    den = (Lc * Lc).sum(axis=(-2, -1))
    s = np.where(den > 1e-12, num / np.where(den > 1e-12, den, 1.0), 1.0)
    s = np.maximum(s, 1e-6)
    t = xb - s[..., None] * Lb
    r = (s[..., None, None] * L + t[..., None, :] - x) * m[..., None]
    rms = np.sqrt((r * r).sum(axis=(-2, -1)) / n)
    return s, t, rms


def fit_layout(points: np.ndarray, n_iter: int = 8):
    """Mean layout of a pattern by alternating per-object alignment.

    ``points`` is ``(R, C, 2)`` with NaN for empty cells. Returns the layout
    ``L`` (R, 2), per-object scale ``s`` (C,), translation ``t`` (C, 2) and
    RMS residual (C,). Gauge: mean scale 1, layout centroid at the origin.
    """
    R, C, _ = points.shape
    mask = ~np.isnan(points[..., 0])
    m = mask.astype(float)
    x = np.where(mask[..., None], points, 0.0)
    cnt_o = np.maximum(m.sum(axis=0), 1.0)
    cent = x.sum(axis=0) / cnt_o[:, None]
    cnt_w = np.maximum(m.sum(axis=1), 1.0)
    L = ((x - cent[None]) * m[..., None]).sum(axis=1) / cnt_w[:, None]
    xo = np.swapaxes(points, 0, 1)
    mo = mask.T
    for _ in range(n_iter):
        s, t, _ = _fit_objects(L, xo, mo)
        L_new = (((x - t[None]) / s[None, :, None]) * m[..., None]).sum(axis=1) / cnt_w[:, None]
        L_new = L_new - L_new.mean(axis=0)
        L_new = L_new * s.mean()
        shift = np.abs(L_new - L).max()
        L = L_new
        if shift <= 1e-9 * max(np.abs(L).max(), 1.0):
            break
    s, t, rms = _fit_objects(L, xo, mo)
    return L, s, t, rms


def object_radii(points: np.ndarray) -> np.ndarray:
    mask = ~np.isnan(points[..., 0])
    hi = np.where(mask[..., None], points, -np.inf).max(axis=0)
    lo = np.where(mask[..., None], points, np.inf).min(axis=0)
    wh = np.maximum(hi - lo, 1.0)
    wh = np.where(np.isfinite(wh), wh, 1.0)
    return 0.5 * wh.sum(axis=-1) / 2.0


def check_pattern(matrix: AssignmentMatrix, descriptors: np.ndarray, cfg: GraspConfig) -> list[str]:
    """Return the list of constraint violations of a pattern (empty if
    feasible). Independent of how the pattern was produced."""
    problems = []
    cells = matrix.cells
    ids = cells[cells != EMPTY]
    if len(ids) != len(set(ids.tolist())):
        problems.append("keypoint reused")
    R, C = cells.shape
    if C < cfg.min_objects:
        problems.append(f"{C} objects < min_objects")
    if R < cfg.min_words:
        problems.append(f"{R} words < min_words")
    for w in range(R):
        row = cells[w][cells[w] != EMPTY]
        if len(row) < cfg.min_objects:
            problems.append(f"word {w} has {len(row)} filled cells")
            continue
        d = descriptors[row]
        dist = np.sqrt(np.maximum(((d[:, None] - d[None]) ** 2).sum(-1), 0.0))
        if dist.max() > cfg.tau_a + 1e-12:
            problems.append(f"word {w} descriptor spread {dist.max():.3f} > tau_a")
    for o in range(C):
        n = int((cells[:, o] != EMPTY).sum())
        if n < cfg.min_words:
            problems.append(f"object {o} has {n} filled cells")
    if R and C:
        _, _, _, rms = fit_layout(matrix.points)
        rel = rms / object_radii(matrix.points)
        for o in np.nonzero(rel > cfg.tau_g + 1e-12)[0]:
            problems.append(f"object {o} geometric residual {rel[o]:.3f} > tau_g")
    return problems


# --------------------------------------------------------------------------
# GRASP


class _Search:
    """Region-local state shared by all restarts."""

    def __init__(self, ids, scene, region, cfg):
        self.ids = ids
        self.X = scene.positions[ids]
        self.desc = scene.descriptors[ids]
        self.cfg = cfg
        self.K = len(ids)
        g = self.desc @ self.desc.T
        sq = (self.desc * self.desc).sum(1)
        self.Dd = np.sqrt(np.maximum(sq[:, None] + sq[None] - 2 * g, 0.0))
        np.fill_diagonal(self.Dd, 0.0)
        self.compat = self.Dd <= cfg.tau_a
        np.fill_diagonal(self.compat, False)
        if region.slot_size is not None:
            sw, sh = region.slot_size
        else:
            x0, y0, x1, y1 = region.rect
            side = np.sqrt(max((x1 - x0) * (y1 - y0), 1.0) / max(region.expected_count, 1))
            sw = sh = side
        self.slot_min = max(min(sw, sh), 1.0)
        self.extent = np.array([cfg.max_extent * sw, cfg.max_extent * sh])
        self.reach = max(sw, sh)
        self.tol = 0.25 * self.slot_min
        self.sep = 0.5 * self.slot_min
        med_scale = float(np.median(scene.scales[ids])) if len(ids) else 0.0
        self.seed_sep = max(2.0 * med_scale, self.sep)
        self.region = region
        # keypoints inside the region's own product boxes; growth is
        # anchored there so neighbours seen through the margin do not
        # seed patterns or attach to objects
        if getattr(region, "home", ()):
            self.home = region.at_home(self.X)
        else:
            self.home = np.ones(self.K, bool)

    # ---- pattern bookkeeping -------------------------------------------

    def points(self, cells):
        R, C = cells.shape
        pts = np.full((R, C, 2), np.nan)
        f = cells != EMPTY
        pts[f] = self.X[cells[f]]
        return pts

    def word_pool(self, cells, used):
        """Per word: unused keypoints compatible with every member."""
        pools = []
        for w in range(cells.shape[0]):
            mem = cells[w][cells[w] != EMPTY]
            ok = np.all(self.compat[mem], axis=0) if len(mem) else np.zeros(self.K, bool)
            pools.append(np.nonzero(ok & ~used)[0])
        return pools

    def intra_distance(self, cells):
        tot = 0.0
        for w in range(cells.shape[0]):
            mem = cells[w][cells[w] != EMPTY]
            if len(mem) > 1:
                tot += float(np.triu(self.Dd[np.ix_(mem, mem)], 1).sum())
        return tot

    def home_objects(self, cells) -> int:
        """Objects whose centroid lies in the region's own product boxes
        (all of them when the region carries no boxes)."""
        if not getattr(self.region, "home", ()):
            return cells.shape[1]
        cent = np.nanmean(self.points(cells), axis=0)
        return int(self.region.at_home(cent).sum())

    def slot_centre(self, xy):
        """Centre of the home box containing ``xy`` (the nearest one if
        none does); ``xy`` itself when the region carries no boxes."""
        boxes = getattr(self.region, "home", ())
        if not boxes:
            return np.asarray(xy, dtype=float)
        centres = np.array([b.center for b in boxes])
        inside = [i for i, b in enumerate(boxes) if b.x0 <= xy[0] <= b.x1 and b.y0 <= xy[1] <= b.y1]
        if inside:
            return centres[inside[0]]
        return centres[np.argmin(np.linalg.norm(centres - xy, axis=1))]

    def row_need(self, C):
        return max(self.cfg.min_objects, int(np.ceil(self.cfg.min_row_fill * C)))

    def within_extent(self, pts):
        """Per object: does the keypoint bounding box fit the size prior?"""
        hi = np.nanmax(pts, axis=-3)
        lo = np.nanmin(pts, axis=-3)
        return np.all(hi - lo <= self.extent, axis=-1)

    def feasible_geometry(self, pts):
        if pts.shape[0] < 2:
            return np.ones(pts.shape[1], bool)
        _, _, _, rms = fit_layout(pts)
        return rms / object_radii(pts) <= self.cfg.tau_g

    # ---- moves ---------------------------------------------------------

    def add_column(self, cells, used):
        R, C = cells.shape
        need = min(R, self.cfg.min_words)
        pts = self.points(cells)
        L, s, t, _ = fit_layout(pts)
        sbar = float(np.median(s))
        cent = np.nanmean(pts, axis=0)
        pools = self.word_pool(cells, used)
        anchors, words = [], []
        for w in range(R):
            anchors.append(pools[w])
            words.append(np.full(len(pools[w]), w))
        anchors = np.concatenate(anchors)
        if not len(anchors):
            return None
        words = np.concatenate(words)
        # drop anchors too close to an existing object
        dc = np.linalg.norm(self.X[anchors][:, None] - cent[None], axis=-1)
        keep = dc.min(axis=1) >= self.sep
        anchors, words = anchors[keep], words[keep]
        if not len(anchors):
            return None
        nc = len(anchors)
        tr = self.X[anchors] - sbar * L[words]
        pred = tr[:, None, :] + sbar * L[None]
        assign = np.full((nc, R), EMPTY)
        gap = np.full((nc, R), np.inf)
        for w in range(R):
            pool = pools[w]
            if not len(pool):
                continue
            d = np.linalg.norm(pred[:, w, None, :] - self.X[pool][None], axis=-1)
            j = d.argmin(axis=1)
            dj = d[np.arange(nc), j]
            ok = dj <= self.tol
            assign[ok, w] = pool[j[ok]]
            gap[ok, w] = dj[ok]
        assign[np.arange(nc), words] = anchors
        gap[np.arange(nc), words] = 0.0
        # a keypoint may not fill two cells of one object
        for w in range(1, R):
            dup = (assign[:, w, None] == assign[:, :w]).any(axis=1) & (assign[:, w] != EMPTY)
            assign[dup, w] = EMPTY
        mask = assign != EMPTY
        cpts = np.where(mask[..., None], self.X[np.where(mask, assign, 0)], np.nan)
        for _ in range(R):
            s_c, t_c, rms = _fit_objects(L, cpts, mask)
            rel = rms / object_radii(np.swapaxes(cpts, 0, 1))
            bad = (rel > self.cfg.tau_g) & (mask.sum(1) > need)
            if not bad.any():
                break
            r = np.linalg.norm(s_c[:, None, None] * L[None] + t_c[:, None] - np.where(mask[..., None], cpts, 0), axis=-1)
            r = np.where(mask, r, -1.0)
            r[np.arange(nc), words] = -1.0
            worst = r.argmax(axis=1)
            rows = np.nonzero(bad)[0]
            mask[rows, worst[rows]] = False
            cpts[rows, worst[rows]] = np.nan
        filled = mask.sum(1)
        span = np.nanmax(cpts, axis=1) - np.nanmin(cpts, axis=1)
        ok = (filled >= need) & (rel <= self.cfg.tau_g) & np.all(span <= self.extent, axis=-1)
        if not ok.any():
            return None
        ccent = np.nanmean(cpts, axis=1)
        dc = np.linalg.norm(ccent[:, None] - cent[None], axis=-1).min(axis=1)
        ok &= dc >= self.sep
        if getattr(self.region, "home", ()):
            ok &= self.region.at_home(ccent)
        if not ok.any():
            return None
        cand = np.nonzero(ok)[0]
        gsum = np.where(mask, gap, 0).sum(1)
        order = np.lexsort((anchors[cand], rel[cand], gsum[cand], -filled[cand]))
        b = cand[order[0]]
        col = np.where(mask[b], assign[b], EMPTY)
        return col

    def add_row(self, cells, used):
        R, C = cells.shape
        pts = self.points(cells)
        L, s, t, _ = fit_layout(pts)
        cent = np.nanmean(pts, axis=0)
        filled = (cells != EMPTY).sum(0)
        ref = int(np.argmax(filled))
        dref = np.linalg.norm(self.X - cent[ref], axis=1)
        # words are preferred close to the slot the reference object sits
        # in, so objects grow from the slot centre outwards instead of
        # drifting into a tiling that straddles neighbouring instances
        dslot = np.linalg.norm(self.X - self.slot_centre(cent[ref]), axis=1)
        in_word = np.zeros(self.K, bool)
        for w in range(R):
            mem = cells[w][cells[w] != EMPTY]
            in_word |= np.all(self.compat[mem], axis=0)
        cand = np.nonzero(~used & ~in_word & (dref <= self.reach))[0]
        if not len(cand):
            return None
        hi = np.nanmax(pts, axis=0)
        lo = np.nanmin(pts, axis=0)
        need = self.row_need(C)
        prelim = []
        for k in cand:
            pool = np.nonzero(self.compat[k] & ~used)[0]
            if not len(pool):
                continue
            ell = (self.X[k] - t[ref]) / s[ref]
            pred = s[:, None] * ell + t
            d = np.linalg.norm(pred[:, None] - self.X[pool][None], axis=-1)
            j = d.argmin(axis=1)
            dj = d[np.arange(C), j]
            q = pool[j]
            ok = dj <= self.tol * s
            xq = self.X[q]
            ok &= np.all(np.maximum(hi, xq) - np.minimum(lo, xq) <= self.extent, axis=-1)
            ok[ref] = False
            if np.any(np.maximum(hi[ref], self.X[k]) - np.minimum(lo[ref], self.X[k]) > self.extent):
                continue
            if not ok.any():
                continue
            # at most one cell per keypoint: keep the closest prediction
            row = np.full(C, EMPTY)
            gaps = np.zeros(C)
            for o in np.argsort(dj, kind="stable"):
                if ok[o] and q[o] not in row:
                    row[o] = q[o]
                    gaps[o] = dj[o]
            row[ref] = k
            # appearance: admit members closest to k first
            mem = [k]
            for o in sorted(np.nonzero(row != EMPTY)[0], key=lambda o: (self.Dd[k, row[o]], row[o])):
                if row[o] == k:
                    continue
                if self.Dd[row[o], mem].max() <= self.cfg.tau_a:
                    mem.append(row[o])
                else:
                    row[o] = EMPTY
            n = int((row != EMPTY).sum())
            if n >= need and self.home[row[row != EMPTY]].mean() > 0.5:
                prelim.append((n, float(dslot[k]), float(gaps[row != EMPTY].sum()), int(k), row))
        if not prelim:
            return None
        prelim.sort(key=lambda p: (-p[0], p[1], p[2], p[3]))
        best = None
        for n, dk, g, k, row in prelim:
            if best is not None and n < best[0]:
                break
            row = row.copy()
            for _ in range(C):
                trial = np.vstack([cells, row])
                ok = self.feasible_geometry(self.points(trial))
                if ok.all():
                    break
                bad = np.nonzero(~ok & (row != EMPTY))[0]
                if not len(bad):
                    row = None
                    break
                row[bad] = EMPTY
                if row[ref] == EMPTY or (row != EMPTY).sum() < need:
                    row = None
                    break
            if row is None or not ok.all():
                continue
            key = (int((row != EMPTY).sum()), -dk, -g, -k)
            if best is None or key > best[:4]:
                best = key + (row,)
        return None if best is None else best[4]

    def grow(self, cells, used, budget):
        moves = 0
        while moves < budget:
            col = self.add_column(cells, used)
            if col is not None:
                cells = np.hstack([cells, col[:, None]])
                used[col[col != EMPTY]] = True
                moves += 1
                continue
            row = self.add_row(cells, used)
            if row is not None:
                cells = np.vstack([cells, row[None]])
                used[row[row != EMPTY]] = True
                moves += 1
                continue
            break
        return cells, moves

    def fill_empty(self, cells, used):
        """Modify-entry moves: fill or improve cells near their predicted
        positions when it keeps the pattern feasible."""
        R, C = cells.shape
        if R < 2:
            return cells, 0
        pts = self.points(cells)
        L, s, t, _ = fit_layout(pts)
        pred = s[None, :, None] * L[:, None, :] + t[None]
        changed = 0
        for w in range(R):
            for o in range(C):
                cur = cells[w, o]
                mem = cells[w][(cells[w] != EMPTY) & (np.arange(C) != o)]
                if not len(mem):
                    continue
                ok = np.all(self.compat[mem], axis=0) & ~used
                pool = np.nonzero(ok)[0]
                if not len(pool):
                    continue
                d = np.linalg.norm(self.X[pool] - pred[w, o], axis=1)
                j = int(np.argmin(d))
                if d[j] > self.tol * s[o]:
                    continue
                if cur != EMPTY and np.linalg.norm(self.X[cur] - pred[w, o]) <= d[j]:
                    continue
                trial = cells.copy()
                trial[w, o] = pool[j]
                tp = self.points(trial)
                if not self.within_extent(tp[:, o:o + 1]).all():
                    continue
                if self.feasible_geometry(tp).all():
                    if cur != EMPTY:
                        used[cur] = False
                    used[pool[j]] = True
                    cells = trial
                    changed += 1
        return cells, changed

    def prune(self, cells):
        """Drop words/objects below the minimum fill until stable."""
        while cells.size:
            f = cells != EMPTY
            rows = f.sum(1) >= self.row_need(cells.shape[1])
            if not rows.all():
                cells = cells[rows]
                continue
            cols = f.sum(0) >= self.cfg.min_words
            if not cols.all():
                cells = cells[:, cols]
                continue
            break
        return cells

    def repair(self, cells):
        """Remove geometrically inconsistent objects until feasible."""
        for _ in range(cells.shape[1] + 1):
            cells = self.prune(cells)
            if cells.shape[0] < self.cfg.min_words or cells.shape[1] < self.cfg.min_objects:
                return None
            ok = self.feasible_geometry(self.points(cells))
            if ok.all():
                return cells
            _, _, _, rms = fit_layout(self.points(cells))
            worst = int(np.argmax(np.where(ok, -np.inf, rms)))
            cells = np.delete(cells, worst, axis=1)
        return None

    def objective(self, cells):
        if cells is None or not cells.size:
            return (0, 0, 0.0)
        return (cells.shape[0] * cells.shape[1], int((cells != EMPTY).sum()), -self.intra_distance(cells))

    def local_search(self, cells, used):
        moves = 0
        budget = self.cfg.max_local_moves
        cells, n = self.fill_empty(cells, used)
        moves += n
        improved = True
        while improved and moves < budget:
            improved = False
            base = self.repair(self.prune(cells.copy()))
            if base is None:
                break
            # delete the weakest object, then regrow
            _, _, _, rms = fit_layout(self.points(base))
            rel = rms / object_radii(self.points(base))
            worst = int(np.argmax(rel))
            trial = np.delete(base, worst, axis=1)
            tused = self.taken.copy()
            tused[trial[trial != EMPTY]] = True
            trial, n = self.grow(trial, tused, budget - moves)
            moves += n + 1
            trial = self.repair(self.prune(trial))
            if trial is not None and self.objective(trial) > self.objective(base):
                cells, used[:] = trial, tused
                improved = True
        return cells

    def run_restart(self, seed_pair, taken):
        i, j = seed_pair
        cells = np.array([[i, j]])
        used = taken.copy()
        used[[i, j]] = True
        cells, moves = self.grow(cells, used, self.cfg.max_local_moves)
        cells = self.local_search(cells, used)
        return self.repair(self.prune(cells))

    def rcl(self, covered):
        K = self.K
        iu, ju = np.triu_indices(K, 1)
        d = self.Dd[iu, ju]
        sep = np.linalg.norm(self.X[iu] - self.X[ju], axis=1)
        ok = (d <= self.cfg.tau_a) & (sep > self.seed_sep) & ~covered[iu] & ~covered[ju]
        ok &= self.home[iu] & self.home[ju]
        if not ok.any():
            return np.zeros((0, 2), int)
        d = d[ok]
        lo = float(d.min())
        thr = lo + self.cfg.rcl_alpha * (self.cfg.tau_a - lo)
        sel = d <= thr
        return np.column_stack([iu[ok][sel], ju[ok][sel]])


def _rank_key(search, cells, ids):
    # patterns are ranked by the coverage of their objects inside the
    # region's own boxes first; neighbours seen through the margin and
    # objects straddling two products rank behind the region's own type
    cov, _, neg_intra = search.objective(cells)
    home = cells.shape[0] * search.home_objects(cells)
    return (-home, -cov, -neg_intra, int(ids[cells[cells != EMPTY]].min()))


def _region_keypoints(region: SearchRegion, scene) -> np.ndarray:
    if len(scene) == 0:
        return np.zeros(0, int)
    return np.nonzero(region.contains(scene.positions))[0]


def detect(region: SearchRegion, scene, cfg: GraspConfig = GraspConfig()) -> list[RecurringPattern]:
    """Detect recurring patterns among the keypoints inside ``region``.

    Returns feasible, de-duplicated patterns sorted by coverage (descending),
    then lower total intra-word descriptor distance, then lowest keypoint id.
    """
    ids = _region_keypoints(region, scene)
    if len(ids) < cfg.min_words * cfg.min_objects:
        return []
    search = _Search(ids, scene, region, cfg)
    rng = np.random.default_rng([cfg.seed, region.region_index])
    taken = np.zeros(search.K, bool)
    dead = np.zeros(search.K, bool)
    kept: list[np.ndarray] = []
    budget = cfg.restarts
    while budget > 0:
        pairs = search.rcl(taken | dead)
        if not len(pairs):
            break
        # one round: several restarts on the unclaimed keypoints
        grown, seen = [], np.zeros(search.K, bool)
        for _ in range(min(cfg.restarts_per_round, budget)):
            budget -= 1
            i, j = (int(v) for v in pairs[rng.integers(len(pairs))])
            if seen[i] and seen[j]:
                continue
            search.taken = taken.copy()
            cells = search.run_restart((i, j), search.taken)
            if cells is None:
                dead[[i, j]] = True
                continue
            seen[cells[cells != EMPTY]] = True
            grown.append(cells)
        grown.sort(key=lambda c: _rank_key(search, c, ids))
        for cells in grown:
            kp = cells[cells != EMPTY]
            shared = taken[kp]
            if shared.sum() > 0.5 * len(kp):
                continue
            if shared.any():
                cells = np.where(np.isin(cells, kp[shared]), EMPTY, cells)
                cells = search.repair(cells)
                if cells is None:
                    continue
            taken[cells[cells != EMPTY]] = True
            kept.append(cells)

    # canonical object order: top-to-bottom, left-to-right by centroid
    out = []
    for cells in kept:
        cent = np.nanmean(search.points(cells), axis=0)
        cells = cells[:, np.lexsort((cent[:, 0], cent[:, 1]))]
        out.append(cells)
    out.sort(key=lambda c: _rank_key(search, c, ids))
    kept = [np.where(c != EMPTY, ids[np.where(c != EMPTY, c, 0)], EMPTY) for c in out]

    patterns = []
    for cells in kept:
        m = AssignmentMatrix.from_cells(cells, scene.positions, scene.descriptors)
        patterns.append(RecurringPattern(m, circles_of(m), region.region_index, region.type_id))
    return patterns

"""End-to-end compliance check and its flat configuration."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .compliance import ComplianceReport, ScoreMatrix, report, score_all, select_matches
from .errors import EmptyDetection, FormatError
from .extract import ProductExemplar, RedetectConfig, extract_exemplar, redetect
from .merging import DetectedLayout, MergedPattern, merge_patterns, normalize
from .partition import PartitionConfig, SearchRegion, partition
from .planogram import Planogram, expected_layout
from .recurpat import GraspConfig, detect


@dataclass
class Config:
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
    max_per_region: int = 25
    margin_frac: float = 0.25
    theta: float = 0.6
    flat_frac: float = 0.5
    min_home_fraction: float = 0.5
    refine: bool = False
    jobs: int = 1
    out: str = ""
    overlay: str = ""

    def grasp(self) -> GraspConfig:
        names = {f.name for f in fields(GraspConfig)}
        return GraspConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def partition(self) -> PartitionConfig:
        return PartitionConfig(self.max_per_region, self.margin_frac)

    def redetect(self) -> RedetectConfig:
        return RedetectConfig(self.tau_a, self.tau_g, self.theta, self.min_words)

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def updated(self, **kw) -> "Config":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, raw: str, default):
    if isinstance(default, bool):
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise FormatError(f"{name}: expected a boolean, got {raw!r}")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise FormatError(f"{name}: cannot parse {raw!r}") from None
    return raw


def parse_config(text: str, base: Optional[Config] = None) -> Config:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    base = base or Config()
    known = {f.name for f in fields(Config)}
    vals = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"config line {n}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise FormatError(f"config line {n}: unknown key {key!r}")
        vals[key] = _coerce(key, raw, getattr(base, key))
    return replace(base, **vals)


def load_config(path, base: Optional[Config] = None) -> Config:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base)


@dataclass
class CheckResult:
    report: ComplianceReport
    regions: list
    patterns: list
    merged: list
    detected: Optional[DetectedLayout]
    scores: ScoreMatrix
    selection: list
    scene_size: tuple
    exemplars: list = field(default_factory=list)
    redetected: dict = field(default_factory=dict)

    @property
    def compliant(self) -> bool:
        return self.report.overall_accuracy == 1.0

    def to_dict(self) -> dict:
        out = self.report.to_dict()
        out["scene"] = {"width": float(self.scene_size[0]), "height": float(self.scene_size[1])}
        out["detections"] = [
            {"pattern": j, "type": m.type_id,
             "circles": [[float(v) for v in c] for c in m.circles]}
            for j, m in enumerate(self.merged)
        ]
        out["exemplars"] = [e.to_dict() for e in self.exemplars]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def detect_all(regions: list[SearchRegion], scene, cfg: GraspConfig, jobs: int = 1) -> list:
    """Per-region detection; results are concatenated in region order
    whatever the completion order."""
    if jobs > 1 and len(regions) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            found = list(pool.map(lambda r: detect(r, scene, cfg), regions))
    else:
        found = [detect(r, scene, cfg) for r in regions]
    return [p for ps in found for p in ps]


def at_home(patterns: list, regions: list[SearchRegion], min_fraction: float) -> list:
    """Keep patterns with at least ``min_fraction`` of their objects inside
    the product boxes of the region they were found in. Margins let a region
    see neighbouring products; a pattern made of those belongs elsewhere."""
    by_index = {r.region_index: r for r in regions}
    keep = []
    for p in patterns:
        c = np.asarray(p.circles)[:, :2]
        if len(c) and by_index[p.source_region].at_home(c).mean() >= min_fraction:
            keep.append(p)
    return keep


def _score(layout, merged, jobs, min_side=1.0):
    try:
        detected = normalize(merged, min_side)
    except EmptyDetection:
        detected = None
    sm = score_all(layout, detected, jobs)
    sel = select_matches(sm)
    return detected, sm, sel


def run_check(planogram: Planogram, scene, cfg: Optional[Config] = None) -> CheckResult:
    cfg = cfg or Config()
    layout = expected_layout(planogram)
    size = (scene.width, scene.height)
    regions = partition(layout, planogram, size, cfg.partition())
    patterns = detect_all(regions, scene, cfg.grasp(), cfg.jobs)
    patterns = at_home(patterns, regions, cfg.min_home_fraction)
    merged = merge_patterns(patterns, {r.region_index: r.type_id for r in regions})
    # a layout narrower than half a product on one axis is flat on that axis
    min_side = cfg.flat_frac * min(min(r.slot_size) for r in regions)
    detected, sm, sel = _score(layout, merged, cfg.jobs, min_side)

    exemplars: list[ProductExemplar] = []
    added: dict = {}
    if cfg.refine and detected is not None and sel:
        rcfg = cfg.redetect()
        exclude = [c for m in merged for c in np.asarray(m.circles)]
        grown = list(merged)
        for i, j in sel:
            t = layout.types[i]
            ex = extract_exemplar(merged[j], t, scene)
            exemplars.append(ex)
            if ex.n_features < rcfg.min_words:
                continue
            new = redetect(ex, scene, exclude, rcfg)
            if not new:
                continue
            added[t] = new
            exclude.extend(np.asarray(c) for c in new)
            m = merged[j]
            grown[j] = MergedPattern(m.type_id, np.vstack([m.circles, np.asarray(new)]),
                                     list(m.members) + [()] * len(new), m.sources)
        if added:
            merged = grown
            detected, sm, sel = _score(layout, merged, cfg.jobs, min_side)

    rep = report(layout, detected, sel, sm)
    return CheckResult(rep, regions, patterns, merged, detected, sm, sel, size, exemplars, added)

"""Feature scenes: keypoints with unit-norm descriptors, file IO, and a
synthetic shelf generator with ground truth."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FormatError, SpecError
from .planogram import Planogram, build_planogram

DEFAULT_DESCRIPTOR_DIM = 16


@dataclass(frozen=True)
class Keypoint:
    pos: tuple[float, float]
    scale: float
    orientation: float
    descriptor: np.ndarray
    gt_label: Optional[tuple[str, int]] = None


@dataclass
class FeatureScene:
    """Keypoints stored column-wise.

    ``positions`` is ``(K, 2)`` in pixels, ``descriptors`` is ``(K, D)``.
    ``gt`` holds an optional ``(type_id, instance_id)`` per keypoint.
    """

    width: int
    height: int
    descriptor_dim: int
    positions: np.ndarray
    scales: np.ndarray
    orientations: np.ndarray
    descriptors: np.ndarray
    gt: list = field(default_factory=list)

    def __post_init__(self):
        K = len(self.positions)
        self.positions = np.asarray(self.positions, dtype=float).reshape(K, 2)
        self.scales = np.asarray(self.scales, dtype=float).reshape(K)
        self.orientations = np.asarray(self.orientations, dtype=float).reshape(K)
        self.descriptors = np.asarray(self.descriptors, dtype=float).reshape(K, self.descriptor_dim)
        if not self.gt:
            self.gt = [None] * K

    def __len__(self):
        return len(self.positions)

    def keypoint(self, i: int) -> Keypoint:
        return Keypoint(
            (float(self.positions[i, 0]), float(self.positions[i, 1])),
            float(self.scales[i]),
            float(self.orientations[i]),
            self.descriptors[i],
            self.gt[i],
        )

    @property
    def keypoints(self) -> list[Keypoint]:
        return [self.keypoint(i) for i in range(len(self))]

    @classmethod
    def empty(cls, width, height, descriptor_dim=DEFAULT_DESCRIPTOR_DIM):
        return cls(width, height, descriptor_dim, np.zeros((0, 2)), np.zeros(0), np.zeros(0),
                   np.zeros((0, descriptor_dim)), [])


def scene_to_dict(scene: FeatureScene) -> dict:
    kps = []
    for i in range(len(scene)):
        gt = scene.gt[i]
        kps.append({
            "x": float(scene.positions[i, 0]),
            "y": float(scene.positions[i, 1]),
            "scale": float(scene.scales[i]),
            "ori": float(scene.orientations[i]),
            "desc": [float(v) for v in scene.descriptors[i]],
            "gt": [gt[0], int(gt[1])] if gt is not None else None,
        })
    return {
        "width": int(scene.width),
        "height": int(scene.height),
        "descriptor_dim": int(scene.descriptor_dim),
        "keypoints": kps,
    }


def scene_from_dict(data: dict) -> FeatureScene:
    try:
        width, height, dim = int(data["width"]), int(data["height"]), int(data["descriptor_dim"])
        records = data["keypoints"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"scene header is invalid: {exc}") from None
    K = len(records)
    pos = np.zeros((K, 2))
    scales = np.zeros(K)
    oris = np.zeros(K)
    desc = np.zeros((K, dim))
    gt = []
    for i, rec in enumerate(records):
        try:
            d = rec["desc"]
            if len(d) != dim:
                raise FormatError(f"keypoint {i} has a {len(d)}-element descriptor; header declares {dim}")
            pos[i] = (rec["x"], rec["y"])
            scales[i] = rec["scale"]
            oris[i] = rec["ori"]
            desc[i] = d
            g = rec.get("gt")
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"keypoint {i} is malformed: {exc}") from None
        gt.append((str(g[0]), int(g[1])) if g is not None else None)
    return FeatureScene(width, height, dim, pos, scales, oris, desc, gt)


def dumps_scene(scene: FeatureScene) -> str:
    # json uses repr() for floats: 17 significant digits, lossless round trip
    return json.dumps(scene_to_dict(scene), separators=(",", ":")) + "\n"


def save_scene(scene: FeatureScene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scene(scene))


def load_scene(path) -> FeatureScene:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"scene file is not valid JSON: {exc}") from None
    return scene_from_dict(data)


# --------------------------------------------------------------------------
# synthetic scenes


@dataclass
class SynthSpec:
    """Parameters of a synthetic shelf scene.

    ``descriptor_noise`` is the expected Euclidean norm of the perturbation
    added to each copied descriptor before renormalization (per-component
    standard deviation ``descriptor_noise / sqrt(D)``). ``position_jitter``
    is the per-axis standard deviation, in pixels, of the Gaussian noise added
    to every keypoint of an instance.

    ``missing`` lists ``(type_id, slot)`` pairs left empty, where ``slot``
    counts that type's slots in row-major order. ``displaced`` lists
    ``(type_id, slot, dx, dy)``: the instance is rendered shifted by
    ``(dx, dy)`` pixels from its slot centre. ``instances`` optionally caps
    the number of filled slots per type (the first slots are filled).
    ``features`` is an int or a per-type mapping.
    """

    planogram: Planogram
    grid_spacing: float = 60.0
    features: object = 6
    descriptor_noise: float = 0.0
    position_jitter: float = 0.0
    missing: list = field(default_factory=list)
    clutter: int = 0
    seed: int = 0
    descriptor_dim: int = DEFAULT_DESCRIPTOR_DIM
    instances: Optional[dict] = None
    displaced: list = field(default_factory=list)

    def features_for(self, type_id: str) -> int:
        if isinstance(self.features, dict):
            return int(self.features[type_id])
        return int(self.features)


@dataclass
class GTInstance:
    type_id: str
    instance_id: int
    slot: tuple[int, int]
    center: tuple[float, float]
    radius: float
    members: list[int]


@dataclass
class GroundTruth:
    instances: list[GTInstance]
    missing: list[tuple[str, int]]
    slot_size: dict[str, tuple[float, float]]

    def of_type(self, type_id: str) -> list[GTInstance]:
        return [g for g in self.instances if g.type_id == type_id]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.instances:
            out[g.type_id] = out.get(g.type_id, 0) + 1
        return out


def scene_dims(planogram: Planogram, spacing: float) -> tuple[int, int]:
    widest = max(len(r.products) for r in planogram.rows)
    return int(round(widest * spacing)), int(round(len(planogram.rows) * spacing))


def _unit_rows(rng, n, dim):
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _validate(spec: SynthSpec):
    p = spec.planogram
    for name in ("descriptor_noise", "position_jitter", "grid_spacing"):
        v = getattr(spec, name)
        if not np.isfinite(v) or v < 0:
            raise SpecError(f"{name} must be finite and nonnegative, got {v}")
    if spec.grid_spacing <= 0:
        raise SpecError("grid_spacing must be positive")
    if spec.clutter < 0:
        raise SpecError("clutter must be nonnegative")
    if spec.descriptor_dim < 2:
        raise SpecError("descriptor_dim must be at least 2")
    n_slots = {t: 0 for t in p.product_types}
    for t, *_ in p.slots():
        n_slots[t] += 1
    for t in p.product_types:
        f = spec.features_for(t)
        if not 3 <= f <= 12:
            raise SpecError(f"features per instance for {t!r} must be in 3..12, got {f}")
    for t, slot in spec.missing:
        if t not in n_slots:
            raise SpecError(f"missing entry names unknown type {t!r}")
        if not 0 <= slot < n_slots[t]:
            raise SpecError(f"missing slot {slot} of type {t!r} out of range 0..{n_slots[t] - 1}")
    for t, slot, *_ in spec.displaced:
        if t not in n_slots or not 0 <= slot < n_slots[t]:
            raise SpecError(f"displaced slot ({t!r}, {slot}) out of range")
    if spec.instances:
        for t, n in spec.instances.items():
            if t not in n_slots or n > n_slots[t] or n < 0:
                raise SpecError(f"type {t!r} cannot hold {n} instances")


def synthesize(spec: SynthSpec) -> tuple[FeatureScene, GroundTruth]:
    """Render a planogram as a feature scene.

    Each type gets one base template (feature offsets inside a disc of radius
    0.4 x its smallest slot side, plus unit descriptors); every filled slot
    receives a translated, jittered copy. Clutter keypoints are uniform with
    independent random descriptors. Keypoint order is shuffled.
    """
    _validate(spec)
    p = spec.planogram
    rng = np.random.default_rng(spec.seed)
    D = spec.descriptor_dim
    W, H = scene_dims(p, spec.grid_spacing)

    slot_size: dict[str, tuple[float, float]] = {}
    for t, _, _, box in p.slots():
        w, h = box.width * W, box.height * H
        pw, ph = slot_size.get(t, (np.inf, np.inf))
        slot_size[t] = (min(pw, w), min(ph, h))

    templates = {}
    for t in p.product_types:
        f = spec.features_for(t)
        rho = 0.4 * min(slot_size[t])
        r = rho * np.sqrt(rng.uniform(0.0, 1.0, f))
        a = rng.uniform(-np.pi, np.pi, f)
        offsets = np.column_stack([r * np.cos(a), r * np.sin(a)])
        templates[t] = (
            offsets,
            _unit_rows(rng, f, D),
            rng.uniform(1.5, 4.0, f),
            rng.uniform(-np.pi, np.pi, f),
            rho,
        )

    missing = {(t, int(s)) for t, s in spec.missing}
    displaced = {(t, int(s)): (float(dx), float(dy)) for t, s, dx, dy in spec.displaced}
    seen = {t: 0 for t in p.product_types}
    pos, desc, scales, oris, gt = [], [], [], [], []
    instances = []
    for t, r, c, box in p.slots():
        k = seen[t]
        seen[t] += 1
        if (t, k) in missing:
            continue
        if spec.instances is not None and t in spec.instances and k >= spec.instances[t]:
            continue
        offsets, tdesc, tscale, tori, rho = templates[t]
        cx, cy = box.center[0] * W, box.center[1] * H
        dx, dy = displaced.get((t, k), (0.0, 0.0))
        cx, cy = cx + dx, cy + dy
        f = len(offsets)
        xy = offsets + (cx, cy) + spec.position_jitter * rng.standard_normal((f, 2))
        d = tdesc
        if spec.descriptor_noise > 0:
            d = tdesc + (spec.descriptor_noise / np.sqrt(D)) * rng.standard_normal((f, D))
            d = d / np.linalg.norm(d, axis=1, keepdims=True)
        start = len(pos)
        pos.extend(xy)
        desc.extend(d)
        scales.extend(tscale)
        oris.extend(tori)
        gt.extend([(t, k)] * f)
        instances.append(GTInstance(t, k, (r, c), (cx, cy), rho, list(range(start, start + f))))

    n_clutter = int(spec.clutter)
    if n_clutter:
        pos.extend(np.column_stack([rng.uniform(0, W, n_clutter), rng.uniform(0, H, n_clutter)]))
        desc.extend(_unit_rows(rng, n_clutter, D))
        scales.extend(rng.uniform(1.5, 4.0, n_clutter))
        oris.extend(rng.uniform(-np.pi, np.pi, n_clutter))
        gt.extend([None] * n_clutter)

    K = len(pos)
    pos = np.asarray(pos, dtype=float).reshape(K, 2)
    pos[:, 0] = np.clip(pos[:, 0], 0.0, W)
    pos[:, 1] = np.clip(pos[:, 1], 0.0, H)
    perm = rng.permutation(K)
    inv = np.empty(K, dtype=int)
    inv[perm] = np.arange(K)
    for inst in instances:
        inst.members = sorted(int(inv[m]) for m in inst.members)
    scene = FeatureScene(
        W, H, D,
        pos[perm],
        np.asarray(scales, dtype=float)[perm],
        np.asarray(oris, dtype=float)[perm],
        np.asarray(desc, dtype=float).reshape(K, D)[perm],
        [gt[i] for i in perm],
    )
    return scene, GroundTruth(instances, sorted(missing), slot_size)


def synth_spec_from_dict(data: dict, planogram: Planogram) -> SynthSpec:
    known = {"grid_spacing", "features", "descriptor_noise", "position_jitter", "missing",
             "clutter", "seed", "descriptor_dim", "instances", "displaced"}
    unknown = set(data) - known
    if unknown:
        raise SpecError(f"unknown synth spec keys: {sorted(unknown)}")
    kw = dict(data)
    kw["missing"] = [(str(t), int(s)) for t, s in kw.get("missing", [])]
    kw["displaced"] = [(str(t), int(s), float(dx), float(dy)) for t, s, dx, dy in kw.get("displaced", [])]
    return SynthSpec(planogram=planogram, **kw)


def random_planogram(rng, n_types, min_count, max_count, row_capacity=20, prefix="SKU"):
    """Planogram with ``n_types`` contiguous blocks laid out row-major.

    Type counts are drawn uniformly from ``[min_count, max_count]``; rows hold
    up to ``row_capacity`` products and are balanced so no row is much shorter
    than the others.
    """
    counts = [int(rng.integers(min_count, max_count + 1)) for _ in range(n_types)]
    seq = [f"{prefix}-{chr(ord('A') + i)}" for i, n in enumerate(counts) for _ in range(n)]
    n_rows = int(np.ceil(len(seq) / row_capacity))
    per_row = int(np.ceil(len(seq) / n_rows))
    rows = [seq[i:i + per_row] for i in range(0, len(seq), per_row)]
    return build_planogram(rows), dict(zip([f"{prefix}-{chr(ord('A') + i)}" for i in range(n_types)], counts))

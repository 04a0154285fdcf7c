"""Type-to-pattern selection and compliance marking."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NumericalError
from .merging import DetectedLayout
from .planogram import ExpectedLayout
from .specmatch import MatchSolution, match


@dataclass
class ScoreMatrix:
    types: list
    scores: np.ndarray
    solutions: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.scores.shape


@dataclass
class TypeReport:
    type_id: str
    expected: int
    matched: int
    accuracy: float
    pattern: Optional[int]
    compliant_slots: list
    missing_slots: list
    unexpected: list

    def to_dict(self) -> dict:
        return {
            "type": self.type_id,
            "expected": self.expected,
            "matched": self.matched,
            "accuracy": self.accuracy,
            "pattern": self.pattern,
            "compliant_slots": [list(s) for s in self.compliant_slots],
            "missing_slots": [list(s) for s in self.missing_slots],
            "unexpected": [{"x": x, "y": y} for x, y in self.unexpected],
        }


@dataclass
class ComplianceReport:
    types: list
    overall_accuracy: float

    def by_type(self, type_id: str) -> TypeReport:
        for t in self.types:
            if t.type_id == type_id:
                return t
        raise KeyError(type_id)

    def to_dict(self) -> dict:
        return {
            "overall_accuracy": self.overall_accuracy,
            "types": [t.to_dict() for t in self.types],
        }


def type_accuracy(n_matched: int, n_expected: int) -> float:
    """``1 - |N_matched - N_expected| / N_expected``, clamped at 0."""
    if n_expected <= 0:
        return 1.0 if n_matched == 0 else 0.0
    return max(0.0, 1.0 - abs(n_matched - n_expected) / n_expected)


def _empty_solution(m: int, n: int) -> MatchSolution:
    return MatchSolution(np.zeros(m * n), [], 0.0)


def expected_frame(expected: ExpectedLayout) -> dict:
    """Expected points min-max normalized over the bounding box of all
    expected centres, the same rule applied to the detected centres. A side
    of zero extent maps to 0.5."""
    allp = np.vstack([expected.point_sets[t] for t in expected.types])
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = hi - lo
    out = {}
    for t in expected.types:
        P = expected.point_sets[t]
        out[t] = np.where(span > 1e-12, (P - lo) / np.where(span > 1e-12, span, 1.0), 0.5)
    return out


def score_all(expected: ExpectedLayout, detected: Optional[DetectedLayout], jobs: int = 1,
              frame: str = "bbox") -> ScoreMatrix:
    """Score every (expected type, detected pattern) pair.

    ``frame="bbox"`` compares expected points in the frame of their own
    bounding box; ``frame="shelf"`` uses them as given in shelf coordinates.
    """
    if frame not in ("bbox", "shelf"):
        raise ValueError(f"unknown frame {frame!r}")
    types = expected.types
    M = len(types)
    N = detected.N if detected is not None else 0
    scores = np.zeros((M, N))
    sols: list = [[None] * N for _ in range(M)]
    diag: dict = {}
    if N == 0:
        return ScoreMatrix(types, scores, sols, diag)

    psets = expected_frame(expected) if frame == "bbox" else expected.point_sets

    def cell(ij):
        i, j = ij
        P = psets[types[i]]
        R = detected.point_sets[j]
        if len(P) == 0 or len(R) == 0:
            return ij, _empty_solution(len(P), len(R)), None
        try:
            return ij, match(P, R, detected.height_box, detected.width_box), None
        except NumericalError as exc:
            return ij, _empty_solution(len(P), len(R)), str(exc)

    cells = [(i, j) for i in range(M) for j in range(N)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(cell, cells))
    else:
        results = [cell(c) for c in cells]
    for (i, j), sol, err in results:
        sols[i][j] = sol
        scores[i, j] = sol.score
        if err:
            diag[(i, j)] = err
    return ScoreMatrix(types, scores, sols, diag)


def select_matches(sm: ScoreMatrix) -> list[tuple[int, int]]:
    """Greedy one-to-one selection on the score matrix: accept the largest
    remaining cell (ties -> lowest (i, j)), strike its row and column."""
    M, N = sm.scores.shape
    live = np.ones((M, N), bool)
    out = []
    while live.any():
        s = np.where(live, sm.scores, -np.inf)
        a = int(np.argmax(s))
        i, j = divmod(a, N)
        out.append((i, j))
        live[i, :] = False
        live[:, j] = False
    return sorted(out)


def report(expected: ExpectedLayout, detected: Optional[DetectedLayout], selection, sm: ScoreMatrix) -> ComplianceReport:
    chosen = dict(selection)
    rows = []
    for i, t in enumerate(expected.types):
        slots = expected.slots[t]
        n_exp = len(slots)
        if i not in chosen or detected is None:
            rows.append(TypeReport(t, n_exp, 0, type_accuracy(0, n_exp), None, [], list(slots), []))
            continue
        j = chosen[i]
        sol = sm.solutions[i][j]
        hit_p = {p for p, _ in sol.cluster}
        hit_r = {r for _, r in sol.cluster}
        compliant = [slots[p] for p in range(n_exp) if p in hit_p]
        missing = [slots[p] for p in range(n_exp) if p not in hit_p]
        pix = detected.pixel_sets[j]
        unexpected = [(float(pix[r, 0]), float(pix[r, 1])) for r in range(len(pix)) if r not in hit_r]
        n_m = len(sol.cluster)
        rows.append(TypeReport(t, n_exp, n_m, type_accuracy(n_m, n_exp), j, compliant, missing, unexpected))
    overall = float(np.mean([r.accuracy for r in rows])) if rows else 1.0
    return ComplianceReport(rows, overall)

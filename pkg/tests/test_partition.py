import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planocheck.partition import PartitionConfig, partition
from planocheck.planogram import build_planogram, expected_layout


def regions_for(rows, dims=(1200, 300), **kw):
    p = build_planogram(rows)
    return p, partition(expected_layout(p), p, dims, PartitionConfig(**kw))


def test_39_split_in_two():
    _, regs = regions_for([["A"] * 39], dims=(2340, 60))
    assert [r.expected_count for r in regs] == [20, 19]


def test_39_split_in_three():
    _, regs = regions_for([["A"] * 13] * 3, dims=(780, 180), max_per_region=13)
    assert [r.expected_count for r in regs] == [13, 13, 13]
    # contiguous groups along the longer (horizontal) axis
    xs = [sorted({c for _, c in r.slots}) for r in regs]
    assert xs[0][-1] <= xs[1][0] and xs[1][-1] <= xs[2][0]


def test_small_type_one_region_with_margin():
    _, regs = regions_for([["B"] * 6 + ["A"] * 4 + ["B"] * 10], dims=(1200, 60))
    a = [r for r in regs if r.type_id == "A"]
    assert len(a) == 1 and a[0].expected_count == 4
    # boxes span x 360..600; margin 0.25 * 240 = 60 per side; y clipped
    assert a[0].rect == (300.0, 0.0, 660.0, 60.0)


def test_margin_zero_is_covering_rectangle():
    _, regs = regions_for([["A", "B"], ["A", "B"]], dims=(200, 100), margin_frac=0)
    assert regs[0].rect == (0.0, 0.0, 100.0, 100.0)
    assert regs[1].rect == (100.0, 0.0, 200.0, 100.0)


def test_order_and_indices():
    _, regs = regions_for([["C"] * 3 + ["A"] * 30, ["B"] * 5], max_per_region=10)
    assert [r.type_id for r in regs] == sorted(r.type_id for r in regs)
    assert [r.region_index for r in regs] == list(range(len(regs)))


def test_bad_config():
    with pytest.raises(ValueError):
        PartitionConfig(max_per_region=1)
    with pytest.raises(ValueError):
        PartitionConfig(margin_frac=-0.1)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.sampled_from("ABC"), min_size=1, max_size=20), min_size=1, max_size=4),
    st.integers(2, 30),
    st.floats(0, 0.5),
)
def test_partition_properties(rows, cap, margin):
    p = build_planogram(rows)
    W, H = 60 * max(len(r) for r in rows), 60 * len(rows)
    regs = partition(expected_layout(p), p, (W, H), PartitionConfig(cap, margin))
    owner = {}
    for r in regs:
        assert 1 <= r.expected_count <= cap
        assert r.expected_count == len(r.slots)
        x0, y0, x1, y1 = r.rect
        assert 0 <= x0 < x1 <= W and 0 <= y0 < y1 <= H
        for s in r.slots:
            assert s not in owner
            owner[s] = r
    for t, row, col, box in p.slots():
        r = owner[(row, col)]
        assert r.type_id == t
        b = box.scaled(W, H)
        x0, y0, x1, y1 = r.rect
        # the whole box, not only its centre, lies inside its region
        assert x0 - 1e-9 <= b.x0 and b.x1 <= x1 + 1e-9 and y0 - 1e-9 <= b.y0 and b.y1 <= y1 + 1e-9
    counts = {}
    for r in regs:
        counts.setdefault(r.type_id, []).append(r.expected_count)
    for t, cs in counts.items():
        n = sum(cs)
        assert len(cs) == -(-n // cap)
        assert max(cs) - min(cs) <= 1

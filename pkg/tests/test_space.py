import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbomm.space import Box, DecisionSpace, Partition, branch, contains, contains_many, volume


def test_volume_examples():
    assert volume(Box((0, 0), (1, 1))) == 1.0
    assert volume(Box((-2, -2), (2, 2))) == 16.0
    assert volume(Box((0, 3), (1, 3))) == 0.0


def test_branch_longest_edge():
    kids = branch(Box((0, 0), (1, 2)), 2)
    assert kids == [Box((0, 0), (1, 1)), Box((0, 1), (1, 2))]


def test_branch_tie_goes_to_first_dim():
    kids = branch(Box((0, 0), (2, 2)), 2)
    assert kids == [Box((0, 0), (1, 2)), Box((1, 0), (2, 2))]


def test_branch_rejects_small_factor():
    with pytest.raises(ValueError):
        branch(Box((0, 0), (1, 1)), 1)


def test_branch_deterministic():
    b = Box((0.1, -3.0, 2.0), (0.7, 1.5, 2.2))
    assert branch(b, 3) == branch(b, 3)


def test_decision_space_needs_positive_width():
    with pytest.raises(ValueError):
        DecisionSpace((0, 0), (1, 0))


boxes = st.lists(
    st.tuples(st.floats(-100, 100), st.floats(1e-3, 50)), min_size=1, max_size=4
).map(lambda spec: Box(tuple(lo for lo, _ in spec), tuple(lo + w for lo, w in spec)))


@settings(max_examples=1000, deadline=None)
@given(boxes, st.integers(2, 5))
def test_children_conserve_volume(box, factor):
    kids = branch(box, factor)
    assert len(kids) == factor
    assert sum(volume(k) for k in kids) == pytest.approx(volume(box), rel=1e-9)


def test_contains_half_open():
    dom = DecisionSpace((0, 0), (2, 2))
    inner = Box((0, 0), (1, 1))
    assert contains(inner, (0.5, 0.5), dom)
    assert not contains(inner, (1.0, 0.5), dom)
    # upper face on the global boundary is inclusive
    assert contains(Box((1, 1), (2, 2)), (2.0, 2.0), dom)


def test_contains_dimension_mismatch():
    with pytest.raises(ValueError):
        contains(Box((0, 0), (1, 1)), (0.5, 0.5, 0.5))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_random_partition_assigns_each_point_once(seed, rounds):
    rng = np.random.default_rng(seed)
    part = Partition(DecisionSpace((-2.0, 0.0), (2.0, 1.0)))
    for _ in range(rounds):
        part.refine(2, select=lambda b: rng.random() < 0.6)
    assert part.total_volume() == pytest.approx(4.0, rel=1e-9)
    pts = rng.uniform((-2.0, 0.0), (2.0, 1.0), size=(500, 2))
    # include the corners and points on shared faces
    edges = np.array([[lf.lower[0], lf.lower[1]] for lf in part.leaves] + [[2.0, 1.0], [-2.0, 1.0]])
    assert np.all(part.locate(np.vstack([pts, edges])) == 1)


def test_partition_leaves_interior_disjoint():
    part = Partition(DecisionSpace((0.0, 0.0), (1.0, 1.0)))
    for _ in range(5):
        part.refine(2)
    centers = np.array([lf.center for lf in part.leaves])
    for i, leaf in enumerate(part.leaves):
        hits = contains_many(leaf, centers, part.root)
        assert hits.sum() == 1 and hits[i]

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sbomm.consistency import (
    INCONSISTENT,
    ConsistencyParams,
    Verdict,
    consistency_scores,
    decide,
    decide_many,
    scores_many,
)


def test_scores_unanimous():
    probs = np.array([[0.6561, 0.1939, 0.15]] * 3)
    scores = consistency_scores([1, 1, 1], probs)
    assert scores == pytest.approx([1.9683, 0.0, 0.0], abs=1e-12)


def test_scores_unanimous_outside():
    probs = np.zeros((3, 3))
    probs[:, 1] = 0.99
    scores = consistency_scores([2, 2, 2], probs)
    assert scores[1] == pytest.approx(2.97)
    assert scores[0] == 0.0 and scores[2] == 0.0


def test_scores_only_use_realized_entries():
    probs = np.array([[0.9, 0.8, 0.7], [0.1, 0.2, 0.3]])
    assert list(consistency_scores([3, 1], probs)) == [0.1, 0.0, 0.7]


def test_scores_dimension_mismatch():
    with pytest.raises(ValueError):
        consistency_scores([1, 2], np.ones((3, 3)))
    with pytest.raises(ValueError):
        consistency_scores([1, 4], np.ones((2, 3)))


def test_decide_reference_vectors():
    p = ConsistencyParams(1, 1)
    assert decide([0, 2.97, 0], p) == Verdict(2)
    assert decide([0.992, 0.99, 0], p) == INCONSISTENT


def test_decide_unanimous_perfect():
    for v, r in [(0.1, 0.1), (3, 3), (1.5, 2.9)]:
        assert decide([3, 0, 0], ConsistencyParams(v, r)) == Verdict(1)


def test_params_validation():
    with pytest.raises(ValueError):
        ConsistencyParams(0, 1)
    with pytest.raises(ValueError):
        ConsistencyParams(1, -0.5)
    with pytest.raises(ValueError):
        ConsistencyParams(4, 1).check(3)


def test_verdict_text():
    assert str(Verdict(2)) == "consistent:2"
    assert str(INCONSISTENT) == "inconsistent"
    assert Verdict.parse("consistent:3") == Verdict(3)
    assert Verdict.parse("inconsistent") == INCONSISTENT


score_vectors = st.lists(st.floats(0, 4, allow_nan=False), min_size=1, max_size=5)
positive = st.floats(1e-6, 4)


@settings(max_examples=500)
@given(score_vectors, positive, positive)
def test_decide_many_agrees_with_decide(scores, v, r):
    expected = decide(scores, ConsistencyParams(v, r)).cls or 0
    assert decide_many([scores], v, r)[0] == expected


@settings(max_examples=500)
@given(score_vectors, positive, positive, st.floats(0.01, 1), st.floats(0.01, 1))
def test_monotone_in_params(scores, v, r, sv, sr):
    got = decide(scores, ConsistencyParams(v, r))
    if got.consistent:
        assert decide(scores, ConsistencyParams(v * sv, r * sr)) == got


@settings(max_examples=300)
@given(st.integers(2, 4), st.integers(2, 4), st.data())
def test_permutation_equivariance(N, K, data):
    labels = data.draw(st.lists(st.integers(1, K), min_size=N, max_size=N))
    probs = np.array(data.draw(st.lists(st.lists(st.floats(0, 1), min_size=K, max_size=K), min_size=N, max_size=N)))
    perm = data.draw(st.permutations(range(K)))
    params = ConsistencyParams(data.draw(positive), data.draw(positive))
    base = decide(consistency_scores(labels, probs), params)
    # class k moves to position perm[k]
    new_labels = [perm[k - 1] + 1 for k in labels]
    new_probs = np.zeros_like(probs)
    new_probs[:, list(perm)] = probs
    moved = decide(consistency_scores(new_labels, new_probs), params)
    assert moved == (Verdict(perm[base.cls - 1] + 1) if base.consistent else INCONSISTENT)


@settings(max_examples=300)
@given(st.integers(1, 5), st.integers(2, 4), st.data())
def test_scores_bounded_by_class_sizes(N, K, data):
    labels = np.array(data.draw(st.lists(st.integers(1, K), min_size=N, max_size=N)))
    probs = np.array(data.draw(st.lists(st.lists(st.floats(0, 1), min_size=K, max_size=K), min_size=N, max_size=N)))
    scores = consistency_scores(labels, probs)
    for k in range(K):
        assert 0 <= scores[k] <= np.sum(labels == k + 1) <= N
    assert scores.sum() <= N
    assert np.allclose(scores_many(labels[None, :], probs)[0], scores)

"""Exact outcome probabilities of the consistency rule under independent models.

Every one of the K**N joint labellings ("cases") is enumerated, weighted by the
product of per-model label probabilities, and sorted by the verdict its scores
produce. A verdict is correct when it matches what an ideal classifier (true
labels, probability one) would give. When the ideal verdict is itself
inconsistent, the class holding the strict plurality of true labels stands in
for it; with a tied plurality no consistent verdict counts as correct.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .consistency import ConsistencyParams, consistency_scores, decide, decide_many, scores_many

MAX_CASES = 10**7


class TooManyCasesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Scenario:
    true_classes: tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        true = tuple(int(k) for k in self.true_classes)
        if probs.ndim != 2 or probs.shape[0] != len(true):
            raise ValueError("probability table must have one row per model")
        if np.any(probs < 0) or np.any(probs > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if not np.allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("each row of the probability table must sum to 1")
        if any(k < 1 or k > probs.shape[1] for k in true):
            raise ValueError("true classes must lie in 1..K")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "true_classes", true)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.true_classes == other.true_classes and np.array_equal(self.probs, other.probs)

    @property
    def N(self) -> int:
        return self.probs.shape[0]

    @property
    def K(self) -> int:
        return self.probs.shape[1]

    def to_dict(self) -> dict:
        return {"true_classes": list(self.true_classes), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(tuple(d["true_classes"]), np.asarray(d["probs"], dtype=float))


def benchmark_scenario(which: int) -> Scenario:
    """The two N=3, K=3 scenarios with alpha = 0.1.

    Each model hits its true class with probability 0.6561 = 0.9**4, lands in
    class 3 with probability 0.15, and in the remaining class otherwise.
    """
    hit, miss, mid = 0.6561, 0.1939, 0.15
    agree = [hit, miss, mid]
    if which == 1:
        return Scenario((1, 1, 1), np.array([agree, agree, agree]))
    if which == 2:
        return Scenario((1, 1, 2), np.array([agree, agree, [miss, hit, mid]]))
    raise ValueError("scenario must be 1 or 2")


@dataclass(frozen=True)
class OutcomeProbabilities:
    p_correct: float
    p_incorrect: float
    p_inconsistent: float
    correct_class: int | None


@lru_cache(maxsize=64)
def _case_matrix(N: int, K: int) -> np.ndarray:
    cases = np.array(list(itertools.product(range(1, K + 1), repeat=N)), dtype=int).reshape(-1, N)
    cases.setflags(write=False)
    return cases


def enumerate_cases(N: int, K: int) -> list[tuple[int, ...]]:
    """All K**N label vectors in lexicographic order."""
    if N < 1 or K < 1:
        raise ValueError("N and K must be positive")
    if K**N > MAX_CASES:
        raise TooManyCasesError(f"K**N = {K**N} exceeds the enumeration guard of {MAX_CASES}")
    return [tuple(int(x) for x in row) for row in _case_matrix(N, K)]


def case_probability(case, scenario: Scenario) -> float:
    case = tuple(case)
    if len(case) != scenario.N:
        raise ValueError("case length does not match the scenario")
    return float(np.prod([scenario.probs[n, k - 1] for n, k in enumerate(case)]))


def ideal_verdict(true_classes, K: int, params: ConsistencyParams):
    """Verdict of the ideal classifier: every model labels its true class with certainty."""
    true = np.asarray(true_classes, dtype=int)
    table = np.zeros((len(true), K))
    table[np.arange(len(true)), true - 1] = 1.0
    return decide(consistency_scores(true, table), params)


def correct_class(scenario: Scenario, params: ConsistencyParams) -> int | None:
    return ideal_verdict(scenario.true_classes, scenario.K, params).cls


def reference_class(scenario: Scenario, params: ConsistencyParams) -> int | None:
    """Class a consistent verdict must name to count as correct.

    This is the ideal verdict when it is consistent, otherwise the strict
    plurality of true classes (None on a tie).
    """
    k = correct_class(scenario, params)
    if k is not None:
        return k
    counts = np.bincount(scenario.true_classes, minlength=scenario.K + 1)[1:]
    top = np.flatnonzero(counts == counts.max())
    return int(top[0]) + 1 if len(top) == 1 else None


class _CaseTable:
    """Cached case probabilities and scores for one scenario."""

    def __init__(self, scenario: Scenario):
        if scenario.K**scenario.N > MAX_CASES:
            raise TooManyCasesError("scenario too large to enumerate")
        self.scenario = scenario
        self.cases = _case_matrix(scenario.N, scenario.K)
        idx = np.arange(scenario.N)
        self.prob = np.prod(scenario.probs[idx, self.cases - 1], axis=1)
        self.scores = scores_many(self.cases, scenario.probs)

    def weights(self, replace_true_with: float | None = None) -> np.ndarray:
        if replace_true_with is None:
            return self.prob
        table = np.array(self.scenario.probs)
        true = np.asarray(self.scenario.true_classes)
        table[np.arange(self.scenario.N), true - 1] = replace_true_with
        return np.prod(table[np.arange(self.scenario.N), self.cases - 1], axis=1)

    def split(self, params: ConsistencyParams, weights: np.ndarray) -> tuple[float, float, int | None]:
        """Weight of correct and of incorrect cases."""
        k_ref = reference_class(self.scenario, params)
        verdicts = decide_many(self.scores, params.v, params.r)
        right = verdicts == (k_ref if k_ref is not None else -1)
        wrong = (verdicts > 0) & ~right
        return float(np.sum(weights[right])), float(np.sum(weights[wrong])), k_ref

    def outcome(self, params: ConsistencyParams) -> OutcomeProbabilities:
        pc, pi, k_ref = self.split(params, self.prob)
        return OutcomeProbabilities(pc, pi, max(0.0, 1.0 - pc - pi), k_ref)


def outcome_probabilities(scenario: Scenario, params: ConsistencyParams) -> OutcomeProbabilities:
    """Probabilities of a correct, an incorrect, and no consistent verdict.

    p_inconsistent is always the probability of an Inconsistent verdict; see
    reference_class for what "correct" means when the ideal verdict is
    inconsistent.
    """
    return _CaseTable(scenario).outcome(params)


def substituted_bounds(scenario: Scenario, params: ConsistencyParams, alpha: float) -> tuple[float, float]:
    """Correct/incorrect sums with (1 - alpha)**4 in place of every true-class probability.

    The qualifying case sets are still those of the scenario table; only the
    weights change.
    """
    table = _CaseTable(scenario)
    bc, bi, _ = table.split(params, table.weights(replace_true_with=(1.0 - alpha) ** 4))
    return bc, bi


def default_grid(N: int, points: int = 300) -> np.ndarray:
    return np.linspace(N / points, N, points)


def sweep(scenario: Scenario, axis: str, fixed: float, grid=None) -> list[tuple[float, float, float, float]]:
    """Outcome probabilities along a grid of v (r fixed) or r (v fixed)."""
    if axis not in ("v", "r"):
        raise ValueError("axis must be 'v' or 'r'")
    grid = default_grid(scenario.N) if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(grid > scenario.N):
        raise ValueError(f"grid values must lie in (0, {scenario.N}]")
    table = _CaseTable(scenario)
    rows = []
    for x in grid:
        params = ConsistencyParams(x, fixed) if axis == "v" else ConsistencyParams(fixed, x)
        o = table.outcome(params)
        rows.append((float(x), o.p_correct, o.p_incorrect, o.p_inconsistent))
    return rows


def case_table(scenario: Scenario, params: ConsistencyParams) -> list[dict]:
    """Per-case probability, scores and verdict, in enumeration order."""
    table = _CaseTable(scenario)
    verdicts = decide_many(table.scores, params.v, params.r)
    return [
        {
            "case": tuple(int(x) for x in case),
            "probability": float(p),
            "scores": [float(s) for s in scores],
            "verdict": "inconsistent" if k == 0 else f"consistent:{int(k)}",
        }
        for case, p, scores, k in zip(table.cases, table.prob, table.scores, verdicts)
    ]

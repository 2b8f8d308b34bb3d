"""Consistency scores and the consistent-classification rule."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConsistencyParams:
    """Score threshold `v` and required margin `r` over every other class."""

    v: float
    r: float

    def __post_init__(self):
        if not self.v > 0:
            raise ValueError(f"v must be positive, got {self.v}")
        if not self.r > 0:
            raise ValueError(f"r must be positive, got {self.r}")

    def check(self, n_models: int) -> None:
        if self.v > n_models or self.r > n_models:
            raise ValueError(f"v and r must not exceed the number of models ({n_models})")


@dataclass(frozen=True)
class Verdict:
    """ConsistentAs(cls) when `cls` is set, Inconsistent when it is None."""

    cls: int | None = None

    @property
    def consistent(self) -> bool:
        return self.cls is not None

    def __str__(self):
        return "inconsistent" if self.cls is None else f"consistent:{self.cls}"

    @classmethod
    def parse(cls, text: str) -> "Verdict":
        if text == "inconsistent":
            return cls(None)
        kind, _, k = text.partition(":")
        if kind != "consistent" or not k.isdigit():
            raise ValueError(f"not a verdict: {text!r}")
        return cls(int(k))


INCONSISTENT = Verdict(None)


def consistency_scores(labels, probs) -> np.ndarray:
    """C[k] = sum of p[n][k] over the models n whose label is k (labels are 1-based)."""
    labels = np.asarray(labels, dtype=int)
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2 or labels.ndim != 1 or probs.shape[0] != len(labels):
        raise ValueError(f"{len(labels)} labels do not match a probability table of shape {probs.shape}")
    K = probs.shape[1]
    if np.any((labels < 1) | (labels > K)):
        raise ValueError(f"labels must lie in 1..{K}")
    scores = np.zeros(K)
    for n, k in enumerate(labels):
        scores[k - 1] += probs[n, k - 1]
    return scores


def scores_many(cases, probs) -> np.ndarray:
    """Scores for a (T, N) array of cases against one (N, K) table -> (T, K)."""
    cases = np.asarray(cases, dtype=int)
    probs = np.asarray(probs, dtype=float)
    N, K = probs.shape
    realized = probs[np.arange(N), cases - 1]  # (T, N)
    out = np.zeros((cases.shape[0], K))
    for k in range(K):
        out[:, k] = np.where(cases == k + 1, realized, 0.0).sum(axis=1)
    return out


def decide(scores, params: ConsistencyParams) -> Verdict:
    scores = np.asarray(scores, dtype=float)
    for k, c in enumerate(scores):
        if c < params.v:
            continue
        if all(c - other >= params.r for j, other in enumerate(scores) if j != k):
            return Verdict(k + 1)
    return INCONSISTENT


def decide_many(scores, v: float, r: float) -> np.ndarray:
    """Vectorised `decide`: 1-based class per row, 0 where inconsistent.

    With r > 0 only the arg-max can clear the margin test, so it suffices to
    check the top score against the runner-up.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=float))
    top = np.argmax(scores, axis=1)
    rows = np.arange(len(scores))
    best = scores[rows, top]
    rest = scores.copy()
    rest[rows, top] = -np.inf
    runner_up = rest.max(axis=1) if scores.shape[1] > 1 else np.full(len(scores), -np.inf)
    ok = (best >= v) & (best - runner_up >= r)
    return np.where(ok, top + 1, 0)

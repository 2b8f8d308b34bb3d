"""Per-model sampling and level-set classification of subregions.

Classification compares a subregion's sampled extrema against distribution-free
confidence bounds on the delta-quantile of the model output over the whole
space. The bounds come from order statistics of a global pool of uniform
samples: for M i.i.d. draws, the l-th smallest value lies below the true
delta-quantile with probability P(Bin(M, delta) >= l).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .space import Box

INSIDE, OUTSIDE, UNDETERMINED = 1, 2, 3
N_CLASSES = 3


@dataclass(frozen=True)
class ClassifierConfig:
    delta: float = 0.2
    alpha: float = 0.1
    epsilon: float = 0.4
    samples_per_region: int = 20
    branch_factor: int = 2
    global_pool_increment: int = 100

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.samples_per_region < 1:
            raise ValueError("samples_per_region must be positive")
        if self.branch_factor < 2:
            raise ValueError("branch_factor must be at least 2")
        if self.global_pool_increment < 1:
            raise ValueError("global_pool_increment must be positive")


class SamplePool:
    """Sorted model outputs at uniform points over the whole space."""

    def __init__(self, model_id: int, values=()):
        self.model_id = model_id
        self.values = np.sort(np.asarray(values, dtype=float))

    @property
    def count(self) -> int:
        return len(self.values)

    def extend(self, new_values) -> None:
        self.values = np.sort(np.concatenate([self.values, np.asarray(new_values, dtype=float)]))

    def __len__(self):
        return self.count


@dataclass(frozen=True)
class QuantileBounds:
    lower: float
    upper: float
    count: int


@dataclass
class RegionModelState:
    """One model's view of one subregion."""

    model_id: int
    points: np.ndarray
    values: np.ndarray
    label: int | None = None
    p: float | None = None
    evaluations: int = 0

    @property
    def alpha_prime(self) -> float | None:
        return None if self.p is None else 1.0 - self.p

    @property
    def n_samples(self) -> int:
        return len(self.values)

    @classmethod
    def empty(cls, model_id: int, dims: int) -> "RegionModelState":
        return cls(model_id, np.empty((0, dims)), np.empty(0))


def draw_uniform(box: Box, count: int, rng: np.random.Generator) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be at least 1")
    return rng.uniform(box.lower, box.upper, size=(count, box.dims))


def binom_tail_ge(M: int, delta: float, l):
    """P(Bin(M, delta) >= l); vectorised over l."""
    out = binom.sf(np.asarray(l) - 1, M, delta)
    return float(out) if np.ndim(out) == 0 else out


def binom_cdf_le(M: int, delta: float, u):
    """P(Bin(M, delta) <= u); vectorised over u."""
    out = binom.cdf(u, M, delta)
    return float(out) if np.ndim(out) == 0 else out


def bound_ranks(M: int, delta: float, alpha: float) -> tuple[int | None, int | None]:
    """Ranks (l*, u*) of the one-sided order-statistic bounds; None if unattainable."""
    if M < 1:
        raise ValueError("empty sample pool")
    ranks = np.arange(1, M + 1)
    level = 1.0 - alpha
    ok_l = np.nonzero(binom_tail_ge(M, delta, ranks) >= level)[0]
    ok_u = np.nonzero(binom_cdf_le(M, delta, ranks - 1) >= level)[0]
    l_star = int(ranks[ok_l[-1]]) if ok_l.size else None
    u_star = int(ranks[ok_u[0]]) if ok_u.size else None
    return l_star, u_star


def quantile_bounds(pool: SamplePool, cfg: ClassifierConfig) -> QuantileBounds:
    M = pool.count
    if M < 1:
        raise ValueError("cannot bound a quantile from an empty pool")
    l_star, u_star = bound_ranks(M, cfg.delta, cfg.alpha)
    lower = pool.values[l_star - 1] if l_star is not None else -math.inf
    upper = pool.values[u_star - 1] if u_star is not None else math.inf
    return QuantileBounds(float(lower), float(upper), M)


def classify_extrema(vmax, vmin, bounds: QuantileBounds, epsilon: float) -> np.ndarray:
    """Labels from per-region sample maxima and minima (vectorised)."""
    vmax = np.asarray(vmax, dtype=float)
    vmin = np.asarray(vmin, dtype=float)
    inside = vmax <= bounds.lower + epsilon
    outside = vmin >= bounds.upper
    labels = np.full(vmax.shape, UNDETERMINED, dtype=int)
    labels[inside & ~outside] = INSIDE
    labels[outside & ~inside] = OUTSIDE
    return labels


def classify_region(state: RegionModelState, bounds: QuantileBounds, cfg: ClassifierConfig) -> int:
    if state.n_samples == 0:
        raise ValueError("cannot classify a region without samples")
    return int(classify_extrema(state.values.max(), state.values.min(), bounds, cfg.epsilon))


def class_probabilities(vmax, vmin, pool: SamplePool, delta: float) -> np.ndarray:
    """(n, 3) array of estimated class probabilities from sampled extrema.

    Column 0 is the confidence that the region maximum sits below the
    delta-quantile, column 1 the confidence that the minimum sits above it,
    column 2 the clamped remainder.
    """
    vmax = np.atleast_1d(np.asarray(vmax, dtype=float))
    vmin = np.atleast_1d(np.asarray(vmin, dtype=float))
    M = pool.count
    l_m = np.searchsorted(pool.values, vmax, side="right")
    u_m = np.searchsorted(pool.values, vmin, side="left") + 1
    p_in = np.clip(binom_tail_ge(M, delta, l_m), 0.0, 1.0)
    p_out = np.clip(binom_cdf_le(M, delta, u_m - 1), 0.0, 1.0)
    p_mid = np.clip(1.0 - p_in - p_out, 0.0, 1.0)
    return np.stack([np.atleast_1d(p_in), np.atleast_1d(p_out), p_mid], axis=1)


def estimate_p(state: RegionModelState, pool: SamplePool, cfg: ClassifierConfig) -> float:
    if state.label is None:
        raise ValueError("region has no label yet")
    row = class_probabilities(state.values.max(), state.values.min(), pool, cfg.delta)[0]
    return float(row[state.label - 1])

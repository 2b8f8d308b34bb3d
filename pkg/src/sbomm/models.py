"""Black-box test models and a dense-grid truth oracle for their target regions."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .space import Box, DecisionSpace, contains_many


class OutOfDomainError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    id: int
    name: str
    domain: DecisionSpace
    # vectorized: (m, d) array -> (m,) array
    evaluator: Callable[[np.ndarray], np.ndarray]

    def __call__(self, points) -> np.ndarray:
        return evaluate_many(self, points)


EX1_DOMAIN = DecisionSpace((-2.0, -2.0), (2.0, 2.0))
EX2_DOMAIN = DecisionSpace((0.0, 0.0), (180.0, 180.0))


def _rosenbrock(x):
    return (1.0 - x[:, 0]) ** 2 + 100.0 * (x[:, 1] - x[:, 0] ** 2) ** 2


def _absquad(x):
    return (np.abs(x[:, 0]) - x[:, 1]) ** 2


def _taylor(x):
    # second-order expansion of the Rosenbrock function about the origin
    return 1.0 - 2.0 * x[:, 0] + 100.0 * x[:, 0] ** 2


def _sinusoid(x):
    x1, x2 = x[:, 0], x[:, 1]
    return (-2.5 * np.sin(np.pi * x1 / 180.0) * np.sin(np.pi * x2 / 180.0)
            - np.sin(np.pi * x1 / 36.0) * np.sin(np.pi * x2 / 36.0))


def _outside_diamond(x, low_sum, diff, high_sum):
    x1, x2 = x[:, 0], x[:, 1]
    return ((x1 + x2 < low_sum) | (x1 - x2 > diff)
            | (-x1 + x2 > diff) | (x1 + x2 > high_sum))


def _piecewise_const(x):
    return np.where(_outside_diamond(x, 75.0, 105.0, 285.0), 100.0, 0.0)


def _absval(x):
    return np.abs(np.abs(x[:, 0] - 90.0) - np.abs(x[:, 1] - 90.0))


def _piecewise_quad(x):
    inner = -(x[:, 0] - 90.0) ** 2 - (x[:, 1] - 90.0) ** 2
    return np.where(_outside_diamond(x, 90.0, 90.0, 270.0), 100.0, inner)


MODELS: dict[str, ModelSpec] = {
    m.name: m
    for m in [
        ModelSpec(1, "ex1_rosenbrock", EX1_DOMAIN, _rosenbrock),
        ModelSpec(2, "ex1_absquad", EX1_DOMAIN, _absquad),
        ModelSpec(3, "ex1_taylor", EX1_DOMAIN, _taylor),
        ModelSpec(1, "ex2_sinusoid", EX2_DOMAIN, _sinusoid),
        ModelSpec(2, "ex2_piecewise_const", EX2_DOMAIN, _piecewise_const),
        ModelSpec(3, "ex2_absval", EX2_DOMAIN, _absval),
        ModelSpec(4, "ex2_piecewise_quad", EX2_DOMAIN, _piecewise_quad),
    ]
}

EXAMPLE1 = ("ex1_rosenbrock", "ex1_absquad", "ex1_taylor")
EXAMPLE2 = ("ex2_sinusoid", "ex2_piecewise_const", "ex2_absval", "ex2_piecewise_quad")


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def evaluate_many(model: ModelSpec, points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lo = np.asarray(model.domain.lower)
    hi = np.asarray(model.domain.upper)
    if pts.shape[1] != model.domain.dims:
        raise ValueError(f"{model.name} expects {model.domain.dims}-dimensional points")
    if np.any((pts < lo) | (pts > hi)):
        raise OutOfDomainError(f"point outside the domain of {model.name}")
    return np.asarray(model.evaluator(pts), dtype=float)


def evaluate(model: ModelSpec, point) -> float:
    return float(evaluate_many(model, np.asarray(point, dtype=float)[None, :])[0])


def quantile_rank(delta: float, count: int) -> int:
    """1-based rank ceil(delta * count), guarded against representation noise."""
    return max(1, math.ceil(round(delta * count, 9)))


@dataclass(frozen=True)
class TruthRaster:
    """Cell-centred grid of one model's values and target-region membership."""

    model_name: str
    domain: DecisionSpace
    resolution: tuple[int, ...]
    threshold: float
    values: np.ndarray
    membership: np.ndarray

    @property
    def centers(self) -> list[np.ndarray]:
        return [
            lo + (np.arange(n) + 0.5) * (hi - lo) / n
            for lo, hi, n in zip(self.domain.lower, self.domain.upper, self.resolution)
        ]

    @property
    def member_fraction(self) -> float:
        return float(self.membership.mean())

    def to_csv(self, path) -> None:
        if self.domain.dims != 2:
            raise ValueError("CSV export is only defined for 2-d rasters")
        c1, c2 = self.centers
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "value", "member"])
            for i, x1 in enumerate(c1):
                for j, x2 in enumerate(c2):
                    w.writerow([repr(float(x1)), repr(float(x2)),
                                repr(float(self.values[i, j])), int(self.membership[i, j])])

    @classmethod
    def from_csv(cls, path, model_name: str) -> "TruthRaster":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        x1 = np.unique(data[:, 0])
        x2 = np.unique(data[:, 1])
        if len(x1) < 2 or len(x2) < 2 or len(data) != len(x1) * len(x2):
            raise ValueError(f"{path}: not a complete rectangular grid")
        h1 = (x1[-1] - x1[0]) / (len(x1) - 1)
        h2 = (x2[-1] - x2[0]) / (len(x2) - 1)
        domain = DecisionSpace((x1[0] - h1 / 2, x2[0] - h2 / 2), (x1[-1] + h1 / 2, x2[-1] + h2 / 2))
        order = np.lexsort((data[:, 1], data[:, 0]))
        values = data[order, 2].reshape(len(x1), len(x2))
        member = data[order, 3].reshape(len(x1), len(x2)).astype(bool)
        # threshold is an attained value and members are exactly the values at or below it
        threshold = float(values[member].max()) if member.any() else -math.inf
        return cls(model_name, domain, (len(x1), len(x2)), threshold, values, member)


def truth_oracle(model: ModelSpec, delta: float, resolution: int) -> TruthRaster:
    """Grid estimate of the model's delta-quantile sublevel set.

    The threshold is the ceil(delta*G)-th smallest of the G cell values and
    membership is `value <= threshold`, so tied plateaus at the threshold are
    included whole.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    dom = model.domain
    axes = [lo + (np.arange(resolution) + 0.5) * (hi - lo) / resolution
            for lo, hi in zip(dom.lower, dom.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    values = evaluate_many(model, pts)
    k = quantile_rank(delta, values.size)
    threshold = float(np.partition(values, k - 1)[k - 1])
    shape = (resolution,) * dom.dims
    return TruthRaster(model.name, dom, shape, threshold,
                       values.reshape(shape), (values <= threshold).reshape(shape))


def true_class(raster: TruthRaster, box: Box) -> int:
    """1 if every cell centre in the box is a member, 2 if none is, 3 otherwise."""
    slices = []
    for axis, lo, hi, top in zip(raster.centers, box.lower, box.upper, raster.domain.upper):
        start = np.searchsorted(axis, lo, side="left")
        stop = np.searchsorted(axis, hi, side="right" if hi >= top else "left")
        slices.append(slice(start, stop))
    cells = raster.membership[tuple(slices)]
    if cells.size == 0:
        value = evaluate(get_model(raster.model_name), box.center)
        return 1 if value <= raster.threshold else 2
    if cells.all():
        return 1
    if not cells.any():
        return 2
    return 3

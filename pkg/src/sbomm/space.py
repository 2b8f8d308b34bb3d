"""Axis-aligned boxes and the shared partition of the decision space."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Boxes whose split edge is at or below this fraction of the original edge
# are no longer branched.
MIN_WIDTH_FRACTION = 1e-6


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(x) for x in self.lower)
        upper = tuple(float(x) for x in self.upper)
        if len(lower) != len(upper):
            raise ValueError("lower and upper must have the same length")
        if any(lo > hi for lo, hi in zip(lower, upper)):
            raise ValueError(f"invalid box: lower {lower} exceeds upper {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dims(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.lower) + np.asarray(self.upper)) / 2.0

    def to_dict(self) -> dict:
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, d: dict) -> "Box":
        return cls(tuple(d["lower"]), tuple(d["upper"]))


@dataclass(frozen=True)
class DecisionSpace(Box):
    """The bounded box X on which every model is defined."""

    def __post_init__(self):
        super().__post_init__()
        if self.dims < 1:
            raise ValueError("decision space needs at least one dimension")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("decision space must have positive width in every dimension")

    def as_box(self) -> Box:
        return Box(self.lower, self.upper)


def volume(box: Box) -> float:
    return float(np.prod(box.widths))


def branch(box: Box, factor: int) -> list[Box]:
    """Split `box` along its longest edge into `factor` equal-width children.

    Ties go to the lowest dimension index. Children are ordered by increasing
    coordinate along the split dimension, and the outer cut points are the
    parent's own bounds so the children tile the parent exactly.
    """
    if int(factor) != factor or factor < 2:
        raise ValueError(f"branch factor must be an integer >= 2, got {factor!r}")
    factor = int(factor)
    widths = box.widths
    dim = int(np.argmax(widths))  # argmax returns the first maximum
    lo, hi = box.lower[dim], box.upper[dim]
    cuts = [lo + (hi - lo) * i / factor for i in range(factor)] + [hi]
    children = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        lower = list(box.lower)
        upper = list(box.upper)
        lower[dim], upper[dim] = a, b
        children.append(Box(tuple(lower), tuple(upper)))
    return children


def can_branch(box: Box, domain: DecisionSpace) -> bool:
    dim = int(np.argmax(box.widths))
    return box.widths[dim] > MIN_WIDTH_FRACTION * domain.widths[dim]


def contains_many(box: Box, points, domain: DecisionSpace | None = None) -> np.ndarray:
    """Membership mask for an (m, d) array of points under the half-open rule.

    A face of `box` that lies on the upper face of `domain` is inclusive, so
    every point of the domain falls in exactly one leaf of a partition.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[1] != box.dims:
        raise ValueError(f"point dimension {pts.shape[1]} does not match box dimension {box.dims}")
    lower = np.asarray(box.lower)
    upper = np.asarray(box.upper)
    below_upper = pts < upper
    if domain is not None:
        on_face = upper >= np.asarray(domain.upper)
        below_upper = below_upper | (on_face & (pts <= upper))
    return np.all((pts >= lower) & below_upper, axis=1)


def contains(box: Box, point, domain: DecisionSpace | None = None) -> bool:
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise ValueError("contains expects a single point")
    return bool(contains_many(box, point[None, :], domain)[0])


@dataclass
class Partition:
    """A set of interior-disjoint boxes covering the root space."""

    root: DecisionSpace
    leaves: list[Box] = field(default_factory=list)

    def __post_init__(self):
        if not self.leaves:
            self.leaves = [self.root.as_box()]

    def refine(self, factor: int, select=None) -> None:
        """Branch every leaf for which `select(box)` is true (all leaves by default)."""
        new = []
        for leaf in self.leaves:
            if (select is None or select(leaf)) and can_branch(leaf, self.root):
                new.extend(branch(leaf, factor))
            else:
                new.append(leaf)
        self.leaves = new

    def total_volume(self) -> float:
        return float(sum(volume(b) for b in self.leaves))

    def locate(self, points) -> np.ndarray:
        """Count of leaves containing each point (1 everywhere for a valid partition)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        counts = np.zeros(len(pts), dtype=int)
        for leaf in self.leaves:
            counts += contains_many(leaf, pts, self.root)
        return counts

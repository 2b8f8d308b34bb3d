"""Compare a solution set against grid truth: would an ideal classifier agree?"""
from __future__ import annotations

import numpy as np

from .analysis import ideal_verdict
from .classify import N_CLASSES
from .consistency import ConsistencyParams
from .engine import SolutionSet
from .models import TruthRaster, true_class, truth_oracle
from .space import Box


def ideal_region_verdict(rasters: list[TruthRaster], box: Box, params: ConsistencyParams, K: int = N_CLASSES):
    return ideal_verdict([true_class(r, box) for r in rasters], K, params)


def agreement_report(regions, rasters: list[TruthRaster], params: ConsistencyParams) -> dict[str, dict]:
    """Per verdict: total volume and the fraction whose ideal verdict matches.

    `regions` is an iterable of (box, verdict-string) pairs.
    """
    report: dict[str, dict] = {}
    for box, verdict in regions:
        vol = float(np.prod(box.widths))
        entry = report.setdefault(verdict, {"volume": 0.0, "matching_volume": 0.0})
        entry["volume"] += vol
        if str(ideal_region_verdict(rasters, box, params)) == verdict:
            entry["matching_volume"] += vol
    for entry in report.values():
        entry["agreement"] = entry["matching_volume"] / entry["volume"] if entry["volume"] > 0 else float("nan")
    return dict(sorted(report.items()))


def solution_agreement(sol: SolutionSet, delta: float | None = None, resolution: int = 512,
                       rasters: list[TruthRaster] | None = None) -> dict[str, dict]:
    cfg = sol.config
    if rasters is None:
        delta = cfg.classifier.delta if delta is None else delta
        rasters = [truth_oracle(spec, delta, resolution) for spec in cfg.specs]
    return agreement_report(((r.box, str(r.verdict)) for r in sol.records), rasters, cfg.consistency)

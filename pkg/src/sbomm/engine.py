"""The branch / sample-and-classify / consistency loop over a shared partition."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classify import (
    N_CLASSES,
    ClassifierConfig,
    RegionModelState,
    SamplePool,
    class_probabilities,
    classify_extrema,
    draw_uniform,
    quantile_bounds,
)
from .consistency import INCONSISTENT, ConsistencyParams, Verdict, consistency_scores, decide
from .models import ModelSpec, evaluate_many, get_model
from .space import Box, DecisionSpace, branch, can_branch, volume

log = logging.getLogger(__name__)

# Only verdicts "inside" and "outside" stop refinement; undetermined and
# inconsistent leaves keep branching.
FREEZE_CLASSES = (1, 2)

# stream tags keep pool draws and region draws in disjoint seed spaces
_POOL_STREAM, _REGION_STREAM = 0, 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    models: tuple[str, ...]
    domain: DecisionSpace | None = None
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    consistency: ConsistencyParams = field(default_factory=lambda: ConsistencyParams(1.0, 1.0))
    target_volume_fraction: float = 0.10
    stop_class: int = 1
    max_iterations: int = 20
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ConfigError("at least one model is required")
        try:
            specs = [get_model(name) for name in self.models]
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        domains = {(s.domain.lower, s.domain.upper) for s in specs}
        if len(domains) != 1:
            raise ConfigError("all models must share the same domain")
        model_domain = specs[0].domain
        if self.domain is None:
            object.__setattr__(self, "domain", model_domain)
        elif (self.domain.lower, self.domain.upper) != (model_domain.lower, model_domain.upper):
            raise ConfigError(f"configured domain does not match the models' domain {model_domain}")
        try:
            self.consistency.check(len(self.models))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 < self.target_volume_fraction <= 1.0:
            raise ConfigError("target_volume_fraction must lie in (0, 1]")
        if not 1 <= self.stop_class <= N_CLASSES:
            raise ConfigError(f"stop_class must lie in 1..{N_CLASSES}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive")

    @property
    def specs(self) -> list[ModelSpec]:
        return [get_model(name) for name in self.models]

    def to_dict(self) -> dict:
        c = self.classifier
        return {
            "models": list(self.models),
            "domain": self.domain.to_dict(),
            "classifier": {
                "delta": c.delta,
                "alpha": c.alpha,
                "epsilon": c.epsilon,
                "samples_per_region": c.samples_per_region,
                "branch_factor": c.branch_factor,
                "global_pool_increment": c.global_pool_increment,
            },
            "consistency": {"v": self.consistency.v, "r": self.consistency.r},
            "target_volume_fraction": self.target_volume_fraction,
            "stop_class": self.stop_class,
            "max_iterations": self.max_iterations,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {"models", "domain", "classifier", "consistency", "target_volume_fraction",
                 "stop_class", "max_iterations", "master_seed"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "models" not in d or "consistency" not in d:
            raise ConfigError("config needs 'models' and 'consistency'")
        try:
            domain = DecisionSpace.from_dict(d["domain"]) if d.get("domain") else None
            classifier = ClassifierConfig(**d.get("classifier", {}))
            consistency = ConsistencyParams(float(d["consistency"]["v"]), float(d["consistency"]["r"]))
            extra = {k: d[k] for k in ("target_volume_fraction", "stop_class", "max_iterations",
                                       "master_seed") if k in d}
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None
        return cls(tuple(d["models"]), domain, classifier, consistency, **extra)


@dataclass
class RegionRecord:
    id: int
    box: Box
    states: list[RegionModelState]
    scores: np.ndarray | None = None
    verdict: Verdict = INCONSISTENT
    frozen: bool = False
    decided_at: int | None = None

    @property
    def volume(self) -> float:
        return volume(self.box)

    @property
    def labels(self) -> list[int | None]:
        return [s.label for s in self.states]


@dataclass
class EngineState:
    cfg: RunConfig
    specs: list[ModelSpec]
    leaves: list[RegionRecord]
    pools: list[SamplePool]
    iteration: int = 0
    next_id: int = 1
    evaluations: np.ndarray = None
    trace: list[dict] = field(default_factory=list)

    @property
    def total_volume(self) -> float:
        return volume(self.cfg.domain)

    def frozen_volume(self, cls: int) -> float:
        return float(sum(r.volume for r in self.leaves if r.frozen and r.verdict.cls == cls))


@dataclass
class SolutionSet:
    config: RunConfig
    records: list[RegionRecord]
    volume_by_verdict: dict[str, float]
    iterations_used: int
    trace: list[dict]
    stopped_by: str

    def fraction(self, verdict: str) -> float:
        return self.volume_by_verdict.get(verdict, 0.0) / volume(self.config.domain)


def stream(seed: int, tag: int, model: int, item: int, iteration: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, tag, model, item, iteration]))


def initialize(cfg: RunConfig) -> EngineState:
    specs = cfg.specs
    dims = cfg.domain.dims
    root = RegionRecord(0, cfg.domain.as_box(), [RegionModelState.empty(n, dims) for n in range(len(specs))])
    return EngineState(
        cfg=cfg,
        specs=specs,
        leaves=[root],
        pools=[SamplePool(n) for n in range(len(specs))],
        evaluations=np.zeros(len(specs), dtype=np.int64),
    )


def _branch_leaves(state: EngineState) -> None:
    cfg = state.cfg
    new = []
    for rec in state.leaves:
        if rec.frozen or not can_branch(rec.box, cfg.domain):
            new.append(rec)
            continue
        children = branch(rec.box, cfg.classifier.branch_factor)
        # children differ only along the split dimension; route samples by cut
        # point (half-open, so a sample on a cut goes to the upper child)
        dim = int(np.argmax(rec.box.widths))
        cuts = np.array([ch.lower[dim] for ch in children[1:]])
        owner = [np.searchsorted(cuts, s.points[:, dim], side="right") for s in rec.states]
        for i, child in enumerate(children):
            states = [RegionModelState(s.model_id, s.points[own == i], s.values[own == i])
                      for s, own in zip(rec.states, owner)]
            new.append(RegionRecord(state.next_id, child, states))
            state.next_id += 1
    state.leaves = new


def _model_pass(state: EngineState, m: int, active: list[RegionRecord]):
    """Top up samples, extend the pool, then label and score every active leaf for model m."""
    cfg, spec = state.cfg, state.specs[m]
    c = cfg.classifier
    seed, it = cfg.master_seed, state.iteration

    rng = stream(seed, _POOL_STREAM, m, 0, it)
    pool_pts = draw_uniform(cfg.domain, c.global_pool_increment, rng)
    state.pools[m].extend(evaluate_many(spec, pool_pts))
    n_evals = c.global_pool_increment

    pending, owners = [], []
    for rec in active:
        s = rec.states[m]
        short = c.samples_per_region - s.n_samples
        if short > 0:
            pending.append(draw_uniform(rec.box, short, stream(seed, _REGION_STREAM, m, rec.id, it)))
            owners.append(rec)
    if pending:
        values = evaluate_many(spec, np.concatenate(pending))
        start = 0
        for rec, pts in zip(owners, pending):
            s = rec.states[m]
            vals = values[start:start + len(pts)]
            start += len(pts)
            s.points = np.concatenate([s.points, pts])
            s.values = np.concatenate([s.values, vals])
            s.evaluations += len(pts)
            n_evals += len(pts)

    bounds = quantile_bounds(state.pools[m], c)
    vmax = np.array([rec.states[m].values.max() for rec in active])
    vmin = np.array([rec.states[m].values.min() for rec in active])
    labels = classify_extrema(vmax, vmin, bounds, c.epsilon)
    table = class_probabilities(vmax, vmin, state.pools[m], c.delta)
    for rec, k, row in zip(active, labels, table):
        rec.states[m].label = int(k)
        rec.states[m].p = float(row[k - 1])
    return n_evals


def settle(rec: RegionRecord, params: ConsistencyParams, iteration: int) -> Verdict:
    """Score a labelled leaf, record its verdict, and freeze it on an inside/outside verdict."""
    table = np.zeros((len(rec.states), N_CLASSES))
    for n, s in enumerate(rec.states):
        table[n, s.label - 1] = s.p
    rec.scores = consistency_scores(rec.labels, table)
    rec.verdict = decide(rec.scores, params)
    if rec.verdict.cls in FREEZE_CLASSES:
        rec.frozen = True
        rec.decided_at = iteration
    return rec.verdict


def iterate(state: EngineState, threads: int = 1) -> EngineState:
    cfg = state.cfg
    state.iteration += 1
    _branch_leaves(state)
    active = [rec for rec in state.leaves if not rec.frozen]
    N = len(state.specs)

    if active:
        if threads == 1 or N == 1:
            evals = [_model_pass(state, m, active) for m in range(N)]
        else:
            with ThreadPoolExecutor(max_workers=threads or None) as ex:
                evals = list(ex.map(lambda m: _model_pass(state, m, active), range(N)))
        state.evaluations += np.asarray(evals, dtype=np.int64)

    for rec in active:
        settle(rec, cfg.consistency, state.iteration)

    total = state.total_volume
    row = {
        "iteration": state.iteration,
        "leaves": len(state.leaves),
        "frozen_class1_volume_fraction": state.frozen_volume(1) / total,
        "frozen_class2_volume_fraction": state.frozen_volume(2) / total,
        "model_evaluations_total": int(state.evaluations.sum()),
    }
    state.trace.append(row)
    log.info("iteration %d: %d leaves, class-1 %.4f, class-2 %.4f", row["iteration"], row["leaves"],
             row["frozen_class1_volume_fraction"], row["frozen_class2_volume_fraction"])
    return state


def volume_criterion_met(state: EngineState) -> bool:
    cfg = state.cfg
    return state.frozen_volume(cfg.stop_class) >= cfg.target_volume_fraction * state.total_volume


def stopping_met(state: EngineState, cfg: RunConfig | None = None) -> bool:
    cfg = cfg or state.cfg
    return volume_criterion_met(state) or state.iteration >= cfg.max_iterations


def solution_set(state: EngineState) -> SolutionSet:
    by_verdict: dict[str, float] = {}
    for rec in state.leaves:
        key = str(rec.verdict)
        by_verdict[key] = by_verdict.get(key, 0.0) + rec.volume
    return SolutionSet(
        config=state.cfg,
        records=list(state.leaves),
        volume_by_verdict=dict(sorted(by_verdict.items())),
        iterations_used=state.iteration,
        trace=list(state.trace),
        stopped_by="volume" if volume_criterion_met(state) else "budget",
    )


def run(cfg: RunConfig, threads: int = 1) -> SolutionSet:
    state = initialize(cfg)
    while True:
        iterate(state, threads=threads)
        if stopping_met(state):
            break
    return solution_set(state)

"""The evolution loop: vote, select, vary.

Each iteration privately scores the current population against the private
data (one Gaussian mechanism), resamples parents proportionally to the
released scores, and replaces the population with variations of the parents.
Two structural options cover both the deployed loop and the model used in
the convergence analysis: ``parent_selection`` chooses between multinomial
resampling and keeping the full support of the released histogram, and
``offspring`` chooses between one scheduled-degree variation per parent and
a full ladder of multi-scale variations; ``retain_parents`` keeps parents
alongside their offspring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import metrics as _metrics
from .accountant import effective_sigma, epsilon_for_delta
from .core import Dataset, Population, Sample
from .embedding import Embedder
from .genapi import VariationDegree
from .rng import RngStream
from .voting import VotingConfig, dp_nn_histogram

__all__ = [
    "EngineConfig",
    "IterationRecord",
    "RunTrace",
    "run_unconditional",
    "run_conditional",
    "generate_more",
]

_TRACE_KEYS = (
    "t",
    "epsilon",
    "hist_std_raw",
    "hist_std_released",
    "coverage_radius",
    "w1",
    "frechet",
    "degenerate_histogram",
)


@dataclass(frozen=True)
class EngineConfig:
    """Everything a run needs besides the data, the backend and the embedder."""

    n_syn: int
    iterations: int
    voting: VotingConfig
    degree_schedule: Optional[VariationDegree] = None
    delta: float = 1e-5
    seed: int = 0
    retain_parents: bool = False
    conditional: bool = False
    parent_selection: str = "resample"  # "resample" | "support"
    offspring: str = "schedule"  # "schedule" | "multi_scale"
    trace_metrics: str = "full"  # "full" | "light"
    keep_intermediate: bool = False
    stop_at_coverage: Optional[float] = None
    # lookahead normally shares the iteration's offspring degree; multi-scale
    # offspring has no single degree, so this overrides it when set
    lookahead_degree: Optional[float] = None
    workers: int = 1

    def __post_init__(self):
        if self.n_syn < 1:
            raise ValueError("n_syn must be >= 1")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if self.parent_selection not in ("resample", "support"):
            raise ValueError(f"unknown parent_selection {self.parent_selection!r}")
        if self.offspring not in ("schedule", "multi_scale"):
            raise ValueError(f"unknown offspring mode {self.offspring!r}")
        if self.trace_metrics not in ("full", "light"):
            raise ValueError(f"unknown trace_metrics {self.trace_metrics!r}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")
        if self.offspring == "schedule" and self.iterations > 0:
            if self.degree_schedule is None or len(self.degree_schedule) < self.iterations:
                raise ValueError("degree schedule must cover all iterations")

    def snapshot(self) -> dict:
        return {
            "n_syn": self.n_syn,
            "iterations": self.iterations,
            "sigma": self.voting.sigma,
            "threshold": self.voting.threshold,
            "lookahead_k": self.voting.lookahead_k,
            "delta": self.delta,
            "seed": self.seed,
            "retain_parents": self.retain_parents,
            "conditional": self.conditional,
            "parent_selection": self.parent_selection,
            "offspring": self.offspring,
            "degree_schedule": None
            if self.degree_schedule is None
            else list(self.degree_schedule.schedule),
        }


@dataclass
class IterationRecord:
    t: int
    epsilon: Optional[float]
    hist_std_raw: float
    hist_std_released: float
    coverage_radius: Optional[float]
    w1: Optional[float]
    frechet: Optional[float]
    degenerate_histogram: bool
    # diagnostic for the noisy-regime analysis; not part of the trace format
    support_match: Optional[bool] = None

    def as_trace_dict(self) -> dict:
        out = {}
        for key in _TRACE_KEYS:
            value = getattr(self, key)
            if isinstance(value, float) and not math.isfinite(value):
                value = None
            out[key] = value
        return out


@dataclass
class RunTrace:
    """Per-iteration privacy spend and quality diagnostics for one run."""

    records: List[IterationRecord] = field(default_factory=list)
    final_epsilon: Optional[float] = 0.0
    config: dict = field(default_factory=dict)
    intermediates: Optional[List[Population]] = None

    def to_jsonl(self, path) -> None:
        """One JSON object per iteration; non-finite numbers become null."""
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.records:
                fh.write(json.dumps(record.as_trace_dict(), sort_keys=False) + "\n")

    @property
    def epsilons(self) -> List[Optional[float]]:
        return [r.epsilon for r in self.records]


def _iteration_epsilon(sigma: float, t: int, delta: float) -> float:
    if sigma == 0:
        return math.inf
    return epsilon_for_delta(effective_sigma(sigma, t), delta)


def _select_parents(
    population: Population, released: np.ndarray, cfg: EngineConfig, stream: RngStream
):
    """Parent multiset for the next generation plus the degenerate flag."""
    total = float(released.sum())
    degenerate = total <= 0.0
    if cfg.parent_selection == "support" and not degenerate:
        idx = np.flatnonzero(released > 0)
    else:
        if degenerate:
            probs = np.full(len(population), 1.0 / len(population))
        else:
            probs = released / total
        # inverse-CDF with one uniform stream in index order, for reproducibility
        cdf = np.cumsum(probs)
        cdf[-1] = 1.0
        draws = stream.generator().random(cfg.n_syn)
        idx = np.searchsorted(cdf, draws, side="right")
    subset = None if population.conditions is None else tuple(
        population.conditions[i] for i in idx
    )
    parents = Population(population.coords[idx], population.generation, conditions=subset)
    return parents, degenerate


def _spawn_offspring(
    parents: Population, degree: Optional[float], cfg: EngineConfig, api, stream: RngStream
) -> Population:
    if cfg.offspring == "schedule":
        return api.variation_api(parents, degree, stream, count_per_sample=1)
    blocks = []
    conditions = [] if parents.conditions is not None else None
    for i in range(len(parents)):
        child = api.multi_scale_variation(
            Sample(parents.coords[i], condition=parents.condition_of(i)),
            stream.child(i),
        )
        blocks.append(child.coords)
        if conditions is not None:
            conditions.extend(child.conditions)
    return Population(
        np.concatenate(blocks, axis=0),
        generation=parents.generation + 1,
        conditions=None if conditions is None else tuple(conditions),
    )


def _measure(
    record: IterationRecord,
    private_emb: np.ndarray,
    population: Population,
    embedder: Embedder,
    cfg: EngineConfig,
) -> None:
    pop_emb = embedder.embed_many(population.coords)
    record.coverage_radius = _metrics.coverage_radius(private_emb, pop_emb)
    if cfg.trace_metrics == "full":
        record.w1 = _metrics.w1_transport(private_emb, pop_emb)
        if private_emb.shape[0] >= 2 and pop_emb.shape[0] >= 2:
            record.frechet = _metrics.frechet_distance(private_emb, pop_emb)


def run_unconditional(
    private: Dataset,
    cfg: EngineConfig,
    api,
    embedder: Embedder,
    condition: Optional[str] = None,
    root: Optional[RngStream] = None,
):
    """Run the loop on one private set; returns (population, trace).

    With ``iterations == 0`` the initial random population is returned
    unchanged at privacy cost 0. A released histogram that sums to zero
    (the threshold swallowed every bin) falls back to uniform selection
    over the current population and flags the iteration in the trace.
    """
    if len(private) == 0:
        raise ValueError("private dataset must be nonempty")
    if root is None:
        root = RngStream(cfg.seed)
    population = api.random_api(cfg.n_syn, condition, root.child("init"))
    private_emb = embedder.embed_many(private.coords)
    trace = RunTrace(config=cfg.snapshot())
    if cfg.keep_intermediate:
        trace.intermediates = [population]

    for t in range(1, cfg.iterations + 1):
        degree = cfg.degree_schedule.at(t) if cfg.degree_schedule is not None else 0.0
        lookahead_degree = (
            cfg.lookahead_degree if cfg.lookahead_degree is not None else degree
        )
        hist = dp_nn_histogram(
            private,
            population,
            cfg.voting,
            embedder,
            api,
            root.child("vote", t),
            lookahead_degree,
            private_embeddings=private_emb,
            workers=cfg.workers,
        )
        parents, degenerate = _select_parents(
            population, hist.released, cfg, root.child("select", t)
        )
        offspring = _spawn_offspring(parents, degree, cfg, api, root.child("offspring", t))
        if cfg.retain_parents:
            conditions = None
            if offspring.conditions is not None:
                conditions = parents.conditions + offspring.conditions
            population = Population(
                np.concatenate([parents.coords, offspring.coords], axis=0),
                generation=t,
                conditions=conditions,
            )
        else:
            population = Population(offspring.coords, generation=t, conditions=offspring.conditions)

        raw_std, released_std = _metrics.histogram_std(hist)
        record = IterationRecord(
            t=t,
            epsilon=_iteration_epsilon(cfg.voting.sigma, t, cfg.delta),
            hist_std_raw=raw_std,
            hist_std_released=released_std,
            coverage_radius=None,
            w1=None,
            frechet=None,
            degenerate_histogram=degenerate,
            support_match=bool(np.array_equal(hist.raw > 0, hist.released > 0)),
        )
        _measure(record, private_emb, population, embedder, cfg)
        trace.records.append(record)
        if cfg.keep_intermediate:
            trace.intermediates.append(population)
        if cfg.stop_at_coverage is not None and record.coverage_radius <= cfg.stop_at_coverage:
            break

    trace.final_epsilon = trace.records[-1].epsilon if trace.records else 0.0
    return population, trace


def _merge_class_traces(traces: List[RunTrace], cfg: EngineConfig) -> RunTrace:
    """Merged view: shared epsilon, per-class diagnostics averaged."""
    merged = RunTrace(config=cfg.snapshot())
    rounds = max((len(tr.records) for tr in traces), default=0)
    for i in range(rounds):
        rows = [tr.records[i] for tr in traces if len(tr.records) > i]
        mean = lambda vals: None if any(v is None for v in vals) else float(np.mean(vals))
        merged.records.append(
            IterationRecord(
                t=i + 1,
                epsilon=rows[0].epsilon,
                hist_std_raw=float(np.mean([r.hist_std_raw for r in rows])),
                hist_std_released=float(np.mean([r.hist_std_released for r in rows])),
                coverage_radius=mean([r.coverage_radius for r in rows]),
                w1=mean([r.w1 for r in rows]),
                frechet=mean([r.frechet for r in rows]),
                degenerate_histogram=any(r.degenerate_histogram for r in rows),
                support_match=all(bool(r.support_match) for r in rows),
            )
        )
    merged.final_epsilon = merged.records[-1].epsilon if merged.records else 0.0
    return merged


def run_conditional(private: Dataset, cfg: EngineConfig, api, embedder: Embedder):
    """Run the loop per class and return the labeled union.

    Each class evolves its own population of size ``n_syn / |C|`` from a
    class-specific stream derived from (seed, label), so class runs are
    independent and order-insensitive. The private data is touched once per
    iteration overall (each sample only votes within its class), so the
    reported privacy cost equals the unconditional cost for the same
    (sigma, T, delta).
    """
    classes = sorted(private.classes)
    if not classes:
        raise ValueError("conditional run requires labeled private data")
    if cfg.n_syn % len(classes) != 0:
        raise ValueError(
            f"n_syn={cfg.n_syn} not divisible by the {len(classes)} private classes"
        )
    per_class = replace(cfg, n_syn=cfg.n_syn // len(classes), conditional=False)
    pieces, traces = [], []
    for label in classes:
        subset = private.restrict_to_class(label)
        if len(subset) == 0:
            raise ValueError(f"class {label!r} has no private samples")
        pop, tr = run_unconditional(
            subset, per_class, api, embedder, root=RngStream(cfg.seed, "class", label)
        )
        pieces.append((label, pop))
        traces.append(tr)
    coords = np.concatenate([pop.coords for _, pop in pieces], axis=0)
    labels = tuple(label for label, pop in pieces for _ in range(len(pop)))
    union = Population(coords, generation=max(p.generation for _, p in pieces), labels=labels)
    return union, _merge_class_traces(traces, cfg)


def generate_more(
    syn: Population, multiplier: int, api, degree: float, rng: RngStream
) -> Population:
    """Unlimited post-hoc generation: ``multiplier`` variation passes over ``syn``.

    Pure post-processing of the released population; performs zero
    accountant updates, so the privacy cost is unchanged.
    """
    if len(syn) == 0:
        raise ValueError("population must be nonempty")
    if multiplier < 1:
        raise ValueError("multiplier must be >= 1")
    blocks = [api.variation_api(syn, degree, rng.child(i)) for i in range(multiplier)]
    coords = np.concatenate([b.coords for b in blocks], axis=0)
    conditions = None
    if syn.conditions is not None:
        conditions = tuple(c for b in blocks for c in b.conditions)
    labels = None if syn.labels is None else syn.labels * multiplier
    return Population(coords, generation=syn.generation + 1, conditions=conditions, labels=labels)

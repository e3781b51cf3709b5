"""Empirical convergence harness.

Builds small worlds matching the modeling assumptions behind the
convergence guarantees (private points with multiplicity B inside a ball,
offspring drawn on a multi-scale Gaussian ladder, parents retained), runs
the evolution loop on them, and measures how fast the coverage radius falls
below the target resolution eta. Sweeps expose the main knobs as axes so
trend claims can be checked with paired seeds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .core import BallWorld, Dataset, Population
from .engine import EngineConfig, RunTrace, run_unconditional
from .embedding import Embedder
from .genapi import SimulatedBackend, SimulatedBackendConfig, VariationDegree
from .metrics import w1_transport
from .voting import VotingConfig

__all__ = [
    "TheoryWorld",
    "TrialResult",
    "SweepBase",
    "build_world",
    "random_support",
    "run_nonprivate_trial",
    "run_private_trial",
    "suggest_noisy_regime",
    "sweep",
    "write_sweep_csv",
    "SWEEP_AXES",
]

SWEEP_AXES = ("L", "B", "sigma", "H", "lookahead_k", "N_syn", "d")


@dataclass(frozen=True)
class TheoryWorld:
    """A ball, a support of distinct private points, and their multiplicity."""

    ball: BallWorld
    support: np.ndarray
    multiplicity: int = 1
    eta: float = 0.05
    tau: float = 0.05

    def __post_init__(self):
        support = np.atleast_2d(np.asarray(self.support, dtype=np.float64))
        support.flags.writeable = False
        object.__setattr__(self, "support", support)
        if self.multiplicity < 1:
            raise ValueError("multiplicity must be >= 1")
        if not 0 < self.eta:
            raise ValueError("eta must be > 0")
        if not 0 < self.tau < 1:
            raise ValueError("tau must be in (0, 1)")
        if support.shape[1] != self.ball.dimension:
            raise ValueError("support dimension does not match the ball")
        if not self.ball.contains(support):
            raise ValueError("support point outside ball")
        if len(np.unique(support, axis=0)) != support.shape[0]:
            raise ValueError("support points must be pairwise distinct")

    @property
    def n_priv(self) -> int:
        return self.support.shape[0] * self.multiplicity


def random_support(ball: BallWorld, count: int, seed: int, margin: float = 0.2) -> np.ndarray:
    """``count`` distinct points inside the ball, at most (1-margin) radius out."""
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0x737570))))
    direction = gen.standard_normal((count, ball.dimension))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = (1.0 - margin) * ball.radius * gen.random(count) ** (1.0 / ball.dimension)
    return ball.center + direction * radius[:, None]


def build_world(world: TheoryWorld) -> Dataset:
    """Private dataset with each support point repeated ``multiplicity`` times."""
    coords = np.repeat(world.support, world.multiplicity, axis=0)
    return Dataset(coords)


@dataclass
class TrialResult:
    iters_to_eta: Optional[int]
    final_coverage: float
    trace: RunTrace
    population: Population

    @property
    def converged(self) -> bool:
        return self.iters_to_eta is not None


def _run_model_trial(
    world: TheoryWorld,
    L: int,
    sigma: float,
    threshold: float,
    iterations: int,
    seed: int,
    n_syn: int,
    stop_at_eta: bool,
    clip: bool = True,
    lookahead_k: int = 0,
) -> TrialResult:
    # the scale ladder needs a resolution below the diameter even when the
    # coverage target eta is vacuously large
    ladder_eta = min(world.eta, world.ball.diameter / 2.0)
    backend_cfg = SimulatedBackendConfig(
        world.ball, variations_per_scale=L, eta=ladder_eta, clip=clip
    )
    backend = SimulatedBackend(backend_cfg)
    cfg = EngineConfig(
        n_syn=n_syn,
        iterations=iterations,
        voting=VotingConfig(sigma=sigma, threshold=threshold, lookahead_k=lookahead_k),
        degree_schedule=None,
        seed=seed,
        retain_parents=True,
        parent_selection="support",
        offspring="multi_scale",
        trace_metrics="light",
        stop_at_coverage=world.eta if stop_at_eta else None,
        lookahead_degree=float(backend_cfg.num_scales),
    )
    private = build_world(world)
    embedder = Embedder(world.ball.dimension)
    population, trace = run_unconditional(private, cfg, backend, embedder)
    iters = next(
        (r.t for r in trace.records if r.coverage_radius is not None and r.coverage_radius <= world.eta),
        None,
    )
    final_cov = trace.records[-1].coverage_radius if trace.records else math.inf
    return TrialResult(iters, float(final_cov), trace, population)


def run_nonprivate_trial(
    world: TheoryWorld, L: int, T_max: int, seed: int, n_syn: int = 16
) -> TrialResult:
    """Noise-free evolution (sigma = H = 0) with parents retained.

    Runs until the coverage radius reaches ``world.eta`` or ``T_max``
    iterations elapse; ``iters_to_eta`` is None on timeout.
    """
    return _run_model_trial(world, L, 0.0, 0.0, T_max, seed, n_syn, stop_at_eta=True)


def run_private_trial(
    world: TheoryWorld,
    L: int,
    sigma: float,
    threshold: float,
    iterations: int,
    seed: int,
    n_syn: int = 16,
) -> TrialResult:
    """Noisy evolution for a fixed number of iterations, full trace kept.

    With ``sigma = threshold = 0`` the trajectory is identical to
    ``run_nonprivate_trial`` for the same seed, iteration by iteration.
    Per-iteration ``support_match`` records whether the bins surviving the
    threshold are exactly the voted bins.
    """
    return _run_model_trial(
        world, L, sigma, threshold, iterations, seed, n_syn, stop_at_eta=False
    )


def suggest_noisy_regime(
    world: TheoryWorld, sigma: float, iterations: int, L: int
) -> dict:
    """Concrete (H, B) making the noisy run behave like the noise-free one.

    The asymptotic conditions are operationalized as
    ``H = 4 * sigma * sqrt(ln(T * L * N_priv / tau))`` and ``B = 5 * H``;
    N_priv depends on B, so the pair is computed with one refinement pass.
    """
    support = world.support.shape[0]
    n_priv = max(support, 1)
    for _ in range(2):
        h = 4.0 * sigma * math.sqrt(math.log(max(iterations * L * n_priv / world.tau, math.e)))
        b = max(int(math.ceil(5.0 * h)), 1)
        n_priv = support * b
    return {"threshold": h, "multiplicity": b, "n_priv": n_priv}


@dataclass
class SweepBase:
    """Base configuration a sweep perturbs one axis of.

    ``mode`` selects the loop structure: "model" uses support selection,
    multi-scale offspring and retained parents (the analyzed variant);
    "deployed" uses multinomial resampling with one scheduled variation per
    parent (the production loop). Schedules for "deployed" default to a
    coarse-to-fine ramp over the scale ladder.
    """

    world: TheoryWorld
    L: int = 16
    sigma: float = 0.0
    threshold: float = 0.0
    lookahead_k: int = 0
    n_syn: int = 64
    iterations: int = 100
    mode: str = "model"  # "model" | "deployed"
    clip: bool = True
    degree_schedule: Optional[Sequence[float]] = None

    def __post_init__(self):
        if self.mode not in ("model", "deployed"):
            raise ValueError(f"unknown sweep mode {self.mode!r}")


def _deployed_schedule(base: SweepBase, backend_cfg: SimulatedBackendConfig) -> VariationDegree:
    if base.degree_schedule is not None:
        return VariationDegree(tuple(base.degree_schedule))
    r = backend_cfg.num_scales
    return VariationDegree.ramp(1.0, float(r), base.iterations)


def _run_deployed_trial(base: SweepBase, seed: int) -> TrialResult:
    backend_cfg = SimulatedBackendConfig(
        base.world.ball, variations_per_scale=base.L, eta=base.world.eta, clip=base.clip
    )
    backend = SimulatedBackend(backend_cfg)
    cfg = EngineConfig(
        n_syn=base.n_syn,
        iterations=base.iterations,
        voting=VotingConfig(base.sigma, base.threshold, base.lookahead_k),
        degree_schedule=_deployed_schedule(base, backend_cfg),
        seed=seed,
        trace_metrics="light",
    )
    private = build_world(base.world)
    embedder = Embedder(base.world.ball.dimension)
    population, trace = run_unconditional(private, cfg, backend, embedder)
    iters = next(
        (r.t for r in trace.records if r.coverage_radius is not None and r.coverage_radius <= base.world.eta),
        None,
    )
    final_cov = trace.records[-1].coverage_radius if trace.records else math.inf
    return TrialResult(iters, float(final_cov), trace, population)


def _world_with(world: TheoryWorld, **kwargs) -> TheoryWorld:
    return TheoryWorld(
        ball=kwargs.get("ball", world.ball),
        support=kwargs.get("support", world.support),
        multiplicity=kwargs.get("multiplicity", world.multiplicity),
        eta=kwargs.get("eta", world.eta),
        tau=kwargs.get("tau", world.tau),
    )


def _apply_axis(base: SweepBase, axis: str, value) -> SweepBase:
    if axis == "L":
        return replace(base, L=int(value))
    if axis == "B":
        return replace(base, world=_world_with(base.world, multiplicity=int(value)))
    if axis == "sigma":
        return replace(base, sigma=float(value))
    if axis == "H":
        return replace(base, threshold=float(value))
    if axis == "lookahead_k":
        return replace(base, lookahead_k=int(value))
    if axis == "N_syn":
        return replace(base, n_syn=int(value))
    if axis == "d":
        dim = int(value)
        ball = BallWorld(np.zeros(dim), base.world.ball.diameter)
        support = random_support(ball, base.world.support.shape[0], seed=dim)
        return replace(base, world=_world_with(base.world, ball=ball, support=support))
    raise ValueError(f"unknown sweep axis {axis!r}; valid axes: {', '.join(SWEEP_AXES)}")


def _run_trial(base: SweepBase, seed: int) -> TrialResult:
    if base.mode == "deployed":
        return _run_deployed_trial(base, seed)
    return _run_model_trial(
        base.world,
        base.L,
        base.sigma,
        base.threshold,
        base.iterations,
        seed,
        base.n_syn,
        stop_at_eta=base.sigma == 0 and base.threshold == 0,
        clip=base.clip,
        lookahead_k=base.lookahead_k,
    )


def sweep(axis: str, values: Sequence, base: SweepBase, seeds: Sequence[int]) -> List[dict]:
    """One trial batch per axis value, with the same seeds for every value.

    Returns one row per (value, seed) with the convergence statistics; the
    shared seeds make cross-value comparisons paired.
    """
    rows = []
    for value in values:
        cfg = _apply_axis(base, axis, value)
        private = build_world(cfg.world)
        for seed in seeds:
            result = _run_trial(cfg, int(seed))
            rows.append(
                {
                    "value": value,
                    "seed": int(seed),
                    "iters_to_eta": result.iters_to_eta,
                    "final_coverage": result.final_coverage,
                    "final_W1": w1_transport(private, result.population),
                }
            )
    return rows


def write_sweep_csv(rows: List[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["value", "seed", "iters_to_eta", "final_coverage", "final_W1"]
        )
        writer.writeheader()
        for row in rows:
            out = dict(row)
            if out["iters_to_eta"] is None:
                out["iters_to_eta"] = ""
            writer.writerow(out)

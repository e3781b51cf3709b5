"""Command-line entry point.

Subcommands: run, accountant, metrics, theory, generate-more, intrinsic-dim.
Run configuration is an INI file with [data], [world], [engine], [privacy],
[api] and [output] sections; all randomness flows from [engine].seed, and
only the API endpoint and output paths may be overridden by environment
variables (DPEVOLVE_API_ENDPOINT, DPEVOLVE_TRACE_PATH, DPEVOLVE_DATASET_PATH).
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import theory as theory_mod
from .accountant import effective_sigma, epsilon_for_delta, sigma_for_budget
from .core import BallWorld, Population, load_dataset, save_dataset
from .embedding import Embedder
from .engine import EngineConfig, generate_more, run_conditional, run_unconditional
from .genapi import HttpBackend, SimulatedBackend, SimulatedBackendConfig, VariationDegree
from .metrics import (
    DEFAULT_EXACT_CAP,
    coverage_radius,
    frechet_distance,
    intrinsic_dimension,
    nn_distance_cdf,
    w1_transport,
    wasserstein_p,
)
from .rng import RngStream
from .voting import VotingConfig

logger = logging.getLogger("dpevolve")


class ConfigError(ValueError):
    """Invalid run configuration; message names the offending field."""


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass
class RunSettings:
    data_path: Path
    data_format: str
    world: BallWorld
    engine: EngineConfig
    sigma_source: str  # "sigma" | "epsilon"
    backend_kind: str  # "simulated" | endpoint URL
    variations_per_scale: int
    eta: float
    clip: bool
    embedder_spec: str
    trace_path: Path
    dataset_path: Path
    dataset_format: str
    summary_path: Path

    def build_backend(self):
        if self.backend_kind == "simulated":
            return SimulatedBackend(
                SimulatedBackendConfig(
                    self.world,
                    variations_per_scale=self.variations_per_scale,
                    eta=self.eta,
                    clip=self.clip,
                )
            )
        return HttpBackend(self.backend_kind, self.world.dimension)

    def build_embedder(self) -> Embedder:
        spec = self.embedder_spec
        if spec == "identity":
            return Embedder(self.world.dimension)
        if spec.startswith("project:"):
            parts = spec.split(":")
            if len(parts) != 3:
                raise ConfigError("[api] embedder must be 'identity' or 'project:<dim>:<seed>'")
            return Embedder(self.world.dimension, int(parts[1]), int(parts[2]))
        raise ConfigError(f"[api] embedder: unknown kind {spec!r}")


def _get(cp: configparser.ConfigParser, section: str, key: str, default=None, required=False):
    if cp.has_option(section, key):
        return cp.get(section, key)
    if required:
        raise ConfigError(f"[{section}] {key} is required")
    return default


def _parse_schedule(raw: Optional[str], iterations: int) -> Optional[VariationDegree]:
    if iterations == 0:
        return None
    if raw is None:
        raise ConfigError("[api] degree_schedule is required for iterations > 0")
    raw = raw.strip()
    if raw.startswith("ramp:"):
        parts = raw.split(":")
        if len(parts) != 3:
            raise ConfigError("[api] degree_schedule ramp form is 'ramp:<start>:<stop>'")
        return VariationDegree.ramp(float(parts[1]), float(parts[2]), iterations)
    values = tuple(float(tok) for tok in raw.split(",") if tok.strip())
    if len(values) < iterations:
        raise ConfigError(
            f"[api] degree_schedule has {len(values)} entries for {iterations} iterations"
        )
    return VariationDegree(values)


def load_run_settings(path, worker_override: Optional[int] = None) -> RunSettings:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    cp.read(path)
    for section in ("data", "world", "engine", "privacy", "api", "output"):
        if not cp.has_section(section):
            raise ConfigError(f"missing [{section}] section")

    data_path = Path(_get(cp, "data", "path", required=True))
    data_format = _get(cp, "data", "format", "csv")
    if not data_path.exists():
        raise ConfigError(f"[data] path does not exist: {data_path}")

    dimension = int(_get(cp, "world", "dimension", required=True))
    center_raw = _get(cp, "world", "center", None)
    center = (
        np.zeros(dimension)
        if center_raw is None
        else np.array([float(t) for t in center_raw.split(",")])
    )
    if center.shape[0] != dimension:
        raise ConfigError("[world] center length must equal dimension")
    world = BallWorld(center, float(_get(cp, "world", "diameter", required=True)))

    iterations = int(_get(cp, "engine", "iterations", required=True))
    n_syn = int(_get(cp, "engine", "n_syn", required=True))
    seed = int(_get(cp, "engine", "seed", "0"))
    retain = cp.getboolean("engine", "retain_parents", fallback=False)
    conditional = cp.getboolean("engine", "conditional", fallback=False)
    workers = int(_get(cp, "engine", "workers", "1"))
    if worker_override is not None:
        workers = worker_override

    sigma_raw = _get(cp, "privacy", "sigma")
    epsilon_raw = _get(cp, "privacy", "epsilon")
    delta = float(_get(cp, "privacy", "delta", required=True))
    threshold = float(_get(cp, "privacy", "threshold", "0"))
    if (sigma_raw is None) == (epsilon_raw is None):
        raise ConfigError("[privacy] supply exactly one of: sigma, epsilon")
    if sigma_raw is not None:
        sigma = float(sigma_raw)
        sigma_source = "sigma"
    else:
        if iterations < 1:
            raise ConfigError("[privacy] epsilon requires [engine] iterations >= 1")
        sigma = sigma_for_budget(float(epsilon_raw), delta, iterations)
        sigma_source = "epsilon"

    backend_kind = _get(cp, "api", "backend", "simulated")
    backend_kind = os.environ.get("DPEVOLVE_API_ENDPOINT", backend_kind)
    variations_per_scale = int(_get(cp, "api", "variations_per_scale", "16"))
    eta = float(_get(cp, "api", "eta", str(world.diameter / 32.0)))
    clip = cp.getboolean("api", "clip", fallback=True)
    lookahead = int(_get(cp, "api", "lookahead", "0"))
    schedule = _parse_schedule(_get(cp, "api", "degree_schedule"), iterations)
    embedder_spec = _get(cp, "api", "embedder", "identity")

    trace_path = Path(os.environ.get("DPEVOLVE_TRACE_PATH", _get(cp, "output", "trace", required=True)))
    dataset_path = Path(
        os.environ.get("DPEVOLVE_DATASET_PATH", _get(cp, "output", "dataset", required=True))
    )
    dataset_format = _get(cp, "output", "dataset_format", "csv")
    summary_path = Path(_get(cp, "output", "summary", str(trace_path) + ".summary.txt"))
    keep_intermediate = cp.getboolean("output", "save_intermediate", fallback=False)

    engine = EngineConfig(
        n_syn=n_syn,
        iterations=iterations,
        voting=VotingConfig(sigma=sigma, threshold=threshold, lookahead_k=lookahead),
        degree_schedule=schedule,
        delta=delta,
        seed=seed,
        retain_parents=retain,
        conditional=conditional,
        keep_intermediate=keep_intermediate,
        workers=workers,
    )
    return RunSettings(
        data_path=data_path,
        data_format=data_format,
        world=world,
        engine=engine,
        sigma_source=sigma_source,
        backend_kind=backend_kind,
        variations_per_scale=variations_per_scale,
        eta=eta,
        clip=clip,
        embedder_spec=embedder_spec,
        trace_path=trace_path,
        dataset_path=dataset_path,
        dataset_format=dataset_format,
        summary_path=summary_path,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _format_epsilon(value) -> str:
    if value is None or (isinstance(value, float) and not math.isfinite(value)):
        return "unbounded"
    return repr(float(value))


def cmd_run(args) -> int:
    settings = load_run_settings(args.config, args.workers)
    private = load_dataset(settings.data_path, settings.data_format)
    backend = settings.build_backend()
    embedder = settings.build_embedder()
    runner = run_conditional if settings.engine.conditional else run_unconditional
    population, trace = runner(private, settings.engine, backend, embedder)

    settings.dataset_path.parent.mkdir(parents=True, exist_ok=True)
    settings.trace_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(population.to_dataset(), settings.dataset_path, settings.dataset_format)
    trace.to_jsonl(settings.trace_path)
    if trace.intermediates is not None:
        # releasing every intermediate population satisfies the same guarantee,
        # since the accounting already covers all T mechanisms
        for t, pop in enumerate(trace.intermediates):
            step_path = settings.dataset_path.with_name(
                f"{settings.dataset_path.stem}.gen{t}{settings.dataset_path.suffix}"
            )
            save_dataset(pop.to_dataset(), step_path, settings.dataset_format)

    cfg = settings.engine
    final_eps = (
        epsilon_for_delta(effective_sigma(cfg.voting.sigma, cfg.iterations), cfg.delta)
        if cfg.voting.sigma > 0 and cfg.iterations > 0
        else (0.0 if cfg.iterations == 0 else math.inf)
    )
    lines = [
        f"seed: {cfg.seed}",
        f"iterations: {cfg.iterations}",
        f"n_syn: {cfg.n_syn}",
        f"sigma: {repr(cfg.voting.sigma)} (from [privacy] {settings.sigma_source})",
        f"threshold: {repr(cfg.voting.threshold)}",
        f"delta: {repr(cfg.delta)}",
        f"epsilon: {_format_epsilon(final_eps)}",
        f"conditional: {cfg.conditional}",
        f"samples_written: {len(population)}",
        f"dataset: {settings.dataset_path}",
        f"trace: {settings.trace_path}",
    ]
    summary = "\n".join(lines) + "\n"
    settings.summary_path.parent.mkdir(parents=True, exist_ok=True)
    settings.summary_path.write_text(summary, encoding="utf-8")
    sys.stdout.write(summary)
    return 0


def cmd_accountant(args) -> int:
    if (args.sigma is None) == (args.epsilon is None):
        raise ConfigError("supply exactly one of --sigma, --epsilon")
    if args.sigma is not None:
        eff = effective_sigma(args.sigma, args.T)
        report = {
            "sigma": args.sigma,
            "iterations": args.T,
            "effective_sigma": eff,
            "delta": args.delta,
            "epsilon": epsilon_for_delta(eff, args.delta),
        }
    else:
        sigma = sigma_for_budget(args.epsilon, args.delta, args.T)
        report = {
            "epsilon": args.epsilon,
            "iterations": args.T,
            "delta": args.delta,
            "sigma": sigma,
            "effective_sigma": effective_sigma(sigma, args.T),
        }
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_metrics(args) -> int:
    a = load_dataset(args.dataset_a, args.format)
    b = load_dataset(args.dataset_b, args.format)
    if len(a) == len(b):
        w1 = wasserstein_p(a, b, p=1.0, exact_cap=args.exact_cap)
        exact = "assignment"
    else:
        w1 = w1_transport(a, b)
        exact = "transport"
    cdf = nn_distance_cdf(b, a)
    report = {
        "w1": w1,
        "w1_solver": exact,
        "coverage_a_to_b": coverage_radius(a, b),
        "coverage_b_to_a": coverage_radius(b, a),
        "frechet": frechet_distance(a, b) if len(a) >= 2 and len(b) >= 2 else None,
        "nn_cdf_percentiles": {
            str(q): float(np.percentile(cdf, q)) for q in (0, 25, 50, 75, 100)
        },
    }
    json.dump(report, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _theory_world(spec: dict) -> theory_mod.TheoryWorld:
    wspec = spec.get("world", {})
    dimension = int(wspec.get("dimension", 2))
    ball = BallWorld(np.zeros(dimension), float(wspec.get("diameter", 1.0)))
    if "support" in wspec:
        support = np.asarray(wspec["support"], dtype=np.float64)
    else:
        support = theory_mod.random_support(
            ball,
            int(wspec.get("support_count", 10)),
            int(wspec.get("support_seed", 1)),
            float(wspec.get("margin", 0.2)),
        )
    return theory_mod.TheoryWorld(
        ball=ball,
        support=support,
        multiplicity=int(wspec.get("multiplicity", 1)),
        eta=float(wspec.get("eta", 0.05)),
        tau=float(wspec.get("tau", 0.05)),
    )


def cmd_theory(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.exists():
        raise ConfigError(f"spec file not found: {spec_path}")
    spec = json.loads(spec_path.read_text(encoding="utf-8"))
    axis = spec.get("axis", "L")
    if axis not in theory_mod.SWEEP_AXES:
        raise ConfigError(
            f"invalid axis {axis!r}; valid axes: {', '.join(theory_mod.SWEEP_AXES)}"
        )
    values = spec.get("values", [16])
    seeds_spec = spec.get("seeds", 20)
    if isinstance(seeds_spec, int):
        seeds = list(range(1, seeds_spec + 1))
    else:
        seeds = [int(s) for s in seeds_spec]
    world = _theory_world(spec)
    bspec = spec.get("base", {})
    base = theory_mod.SweepBase(
        world=world,
        L=int(bspec.get("L", 16)),
        sigma=float(bspec.get("sigma", 0.0)),
        threshold=float(bspec.get("H", 0.0)),
        lookahead_k=int(bspec.get("lookahead_k", 0)),
        n_syn=int(bspec.get("n_syn", 16)),
        iterations=int(bspec.get("iterations", 200)),
        mode=bspec.get("mode", "model"),
        clip=bool(bspec.get("clip", True)),
        degree_schedule=bspec.get("degree_schedule"),
    )
    rows = theory_mod.sweep(axis, values, base, seeds)
    out_path = Path(spec.get("output", "sweep.csv"))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    theory_mod.write_sweep_csv(rows, out_path)
    print(f"wrote {len(rows)} rows to {out_path}")

    failures = 0
    checks = spec.get("assertions", {})
    if "min_converged_fraction" in checks:
        need = float(checks["min_converged_fraction"])
        got = sum(1 for r in rows if r["iters_to_eta"] is not None) / len(rows)
        ok = got >= need
        failures += not ok
        print(f"assert converged fraction >= {need}: got {got:.3f} -> {'PASS' if ok else 'FAIL'}")
    if checks.get("median_iters_non_increasing"):
        medians = []
        for v in values:
            per = [
                r["iters_to_eta"] if r["iters_to_eta"] is not None else math.inf
                for r in rows
                if r["value"] == v
            ]
            medians.append(float(np.median(per)))
        ok = all(x >= y for x, y in zip(medians, medians[1:]))
        failures += not ok
        print(f"assert median iters non-increasing: {medians} -> {'PASS' if ok else 'FAIL'}")
    if checks.get("final_w1_non_increasing"):
        means = [
            float(np.mean([r["final_W1"] for r in rows if r["value"] == v])) for v in values
        ]
        ok = all(x >= y for x, y in zip(means, means[1:]))
        failures += not ok
        print(f"assert mean final W1 non-increasing: {means} -> {'PASS' if ok else 'FAIL'}")
    return 1 if failures else 0


def cmd_generate_more(args) -> int:
    if args.multiplier < 1:
        raise ConfigError("--multiplier must be >= 1")
    settings = load_run_settings(args.config)
    dataset = load_dataset(args.dataset, args.format)
    backend = settings.build_backend()
    degree = args.degree
    if degree is None:
        schedule = settings.engine.degree_schedule
        degree = schedule.schedule[-1] if schedule is not None else 1.0
    syn = Population(dataset.coords, labels=dataset.labels)
    more = generate_more(
        syn,
        args.multiplier,
        backend,
        degree,
        RngStream(settings.engine.seed, "generate-more"),
    )
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(more.to_dataset(), out_path, args.format)
    print(f"wrote {len(more)} samples to {out_path}")
    print("privacy cost unchanged: variation of released data is post-processing")
    return 0


def cmd_intrinsic_dim(args) -> int:
    dataset = load_dataset(args.dataset, args.format)
    print(intrinsic_dimension(dataset.coords, args.threshold))
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpevolve",
        description="Differentially private synthetic data from blackbox generation APIs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a full evolution run from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--workers", type=int, default=None, help="worker threads (never affects outputs)")
    p_run.set_defaults(func=cmd_run)

    p_acc = sub.add_parser("accountant", help="convert between sigma and (epsilon, delta)")
    p_acc.add_argument("--sigma", type=float, default=None)
    p_acc.add_argument("--epsilon", type=float, default=None)
    p_acc.add_argument("--delta", type=float, required=True)
    p_acc.add_argument("--T", type=int, default=1, help="number of composed iterations")
    p_acc.set_defaults(func=cmd_accountant)

    p_met = sub.add_parser("metrics", help="compare two datasets")
    p_met.add_argument("dataset_a")
    p_met.add_argument("dataset_b")
    p_met.add_argument("--format", default="csv", choices=("csv", "binary"))
    p_met.add_argument("--exact-cap", type=int, default=DEFAULT_EXACT_CAP)
    p_met.set_defaults(func=cmd_metrics)

    p_theory = sub.add_parser("theory", help="run a convergence sweep from a JSON spec")
    p_theory.add_argument("spec")
    p_theory.set_defaults(func=cmd_theory)

    p_gen = sub.add_parser("generate-more", help="post-process a released dataset into more samples")
    p_gen.add_argument("dataset")
    p_gen.add_argument("--multiplier", type=int, required=True)
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--output", required=True)
    p_gen.add_argument("--degree", type=float, default=None)
    p_gen.add_argument("--format", default="csv", choices=("csv", "binary"))
    p_gen.set_defaults(func=cmd_generate_more)

    p_dim = sub.add_parser("intrinsic-dim", help="estimate the intrinsic dimension of variations")
    p_dim.add_argument("dataset")
    p_dim.add_argument("--threshold", type=float, default=0.8)
    p_dim.add_argument("--format", default="csv", choices=("csv", "binary"))
    p_dim.set_defaults(func=cmd_intrinsic_dim)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())

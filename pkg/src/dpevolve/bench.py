"""Micro-benchmarks for the hot kernels.

Timings are informational only (hardware-dependent); every case also checks
that the multi-worker result equals the single-threaded one exactly, which
is the contract CI asserts on. Reports are machine-readable JSON.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List

import numpy as np

from .voting import nn_histogram

__all__ = ["BenchCase", "bench_voting", "write_reports", "DEFAULT_CASES"]


@dataclass(frozen=True)
class BenchCase:
    name: str
    n_priv: int
    n_syn: int
    dimension: int
    repetitions: int = 3
    workers: int = 4

    def __post_init__(self):
        if min(self.n_priv, self.n_syn, self.dimension, self.repetitions, self.workers) < 1:
            raise ValueError("all bench case counts must be >= 1")


DEFAULT_CASES = (
    BenchCase("tiny", 1, 1, 1, repetitions=1, workers=2),
    BenchCase("voting_small", 2_000, 2_000, 16),
    BenchCase("voting_medium", 20_000, 10_000, 64, repetitions=2),
    # scaled stand-in for a full image-sized round; run on demand
    BenchCase("voting_large", 50_000, 50_000, 64, repetitions=1, workers=8),
)


def bench_voting(case: BenchCase, seed: int = 0) -> dict:
    """Time one voting round and verify parallel/serial equality."""
    gen = np.random.Generator(np.random.PCG64(seed))
    private = gen.standard_normal((case.n_priv, case.dimension))
    population = gen.standard_normal((case.n_syn, case.dimension))

    serial = nn_histogram(private, population, workers=1)
    times = []
    parallel = None
    for _ in range(case.repetitions):
        start = time.perf_counter()
        parallel = nn_histogram(private, population, workers=case.workers)
        times.append(time.perf_counter() - start)
    return {
        "case": asdict(case),
        "wall_time_s": times,
        "mean_wall_time_s": float(np.mean(times)),
        "matches_serial": bool(np.array_equal(serial, parallel)),
        "votes_total": int(serial.sum()),
    }


def write_reports(reports: List[dict], out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "voting_bench.json"
    path.write_text(json.dumps(reports, indent=2) + "\n", encoding="utf-8")
    return path


def main(argv=None) -> int:  # pragma: no cover - manual tool
    import argparse

    parser = argparse.ArgumentParser(description="voting kernel benchmarks")
    parser.add_argument("--out", default="benchmarks")
    parser.add_argument("--cases", nargs="*", default=["tiny", "voting_small"])
    args = parser.parse_args(argv)
    by_name = {c.name: c for c in DEFAULT_CASES}
    reports = []
    for name in args.cases:
        report = bench_voting(by_name[name])
        print(
            f"{name}: mean {report['mean_wall_time_s']:.3f}s, "
            f"matches_serial={report['matches_serial']}"
        )
        reports.append(report)
    path = write_reports(reports, args.out)
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(main())

import dataclasses
import math

import numpy as np
import pytest

from dpevolve import (
    Dataset,
    Embedder,
    EngineConfig,
    Population,
    RngStream,
    VariationDegree,
    VotingConfig,
    generate_more,
    run_conditional,
    run_unconditional,
)
from dpevolve.engine import _select_parents


def _private(n=12, dim=2, seed=0, labels=None):
    gen = np.random.default_rng(seed)
    coords = gen.uniform(-0.3, 0.3, size=(n, dim))
    return Dataset(coords, labels)


def _cfg(**kwargs):
    defaults = dict(
        n_syn=16,
        iterations=4,
        voting=VotingConfig(0.0, 0.0, 0),
        degree_schedule=VariationDegree.ramp(1, 4, 4),
        seed=3,
    )
    defaults.update(kwargs)
    return EngineConfig(**defaults)


def test_zero_iterations_returns_initial_population(backend2d, identity2d):
    cfg = _cfg(iterations=0, degree_schedule=None)
    pop, trace = run_unconditional(_private(), cfg, backend2d, identity2d)
    direct = backend2d.random_api(16, None, RngStream(3).child("init"))
    assert np.array_equal(pop.coords, direct.coords)
    assert trace.records == [] and trace.final_epsilon == 0.0


def test_population_size_invariant(backend2d, identity2d):
    pop, trace = run_unconditional(_private(), _cfg(), backend2d, identity2d)
    assert len(pop) == 16
    assert pop.generation == 4
    assert len(trace.records) == 4


def test_point_mass_histogram_selects_single_parent(backend2d, identity2d):
    population = backend2d.random_api(6, None, RngStream(0))
    released = np.array([1.0, 0, 0, 0, 0, 0])
    parents, degenerate = _select_parents(
        population, released, _cfg(n_syn=10), RngStream(1).child("select", 1)
    )
    assert not degenerate
    assert len(parents) == 10
    assert np.all(parents.coords == population.coords[0])


def test_degenerate_histogram_falls_back_to_uniform(backend2d, identity2d):
    population = backend2d.random_api(6, None, RngStream(0))
    parents, degenerate = _select_parents(
        population, np.zeros(6), _cfg(n_syn=1000), RngStream(1).child("select", 1)
    )
    assert degenerate
    counts = np.bincount(
        [int(np.flatnonzero((population.coords == row).all(axis=1))[0]) for row in parents.coords],
        minlength=6,
    )
    assert np.all(counts > 100)  # roughly uniform across all six members

    # a threshold larger than any count forces the degenerate path end to end
    cfg = _cfg(voting=VotingConfig(0.0, 1e6, 0))
    _, trace = run_unconditional(_private(), cfg, backend2d, identity2d)
    assert all(r.degenerate_histogram for r in trace.records)


def test_resampling_frequencies_match_probabilities(backend2d):
    population = backend2d.random_api(4, None, RngStream(0))
    released = np.array([4.0, 3.0, 2.0, 1.0])
    probs = released / released.sum()
    draws = 10_000
    parents, _ = _select_parents(
        population, released, _cfg(n_syn=draws), RngStream(42).child("select", 1)
    )
    counts = np.array(
        [np.sum((parents.coords == population.coords[i]).all(axis=1)) for i in range(4)]
    )
    freqs = counts / draws
    se = np.sqrt(probs * (1 - probs) / draws)
    assert np.all(np.abs(freqs - probs) <= 3 * se)


def test_epsilon_strictly_increasing(backend2d, identity2d):
    cfg = _cfg(voting=VotingConfig(2.0, 1.0, 0))
    _, trace = run_unconditional(_private(), cfg, backend2d, identity2d)
    eps = trace.epsilons
    assert all(e is not None and math.isfinite(e) for e in eps)
    assert all(a < b for a, b in zip(eps, eps[1:]))
    assert trace.final_epsilon == eps[-1]


def test_nonprivate_run_reports_unbounded_epsilon(backend2d, identity2d):
    _, trace = run_unconditional(_private(), _cfg(), backend2d, identity2d)
    assert all(e == math.inf for e in trace.epsilons)
    assert trace.records[0].as_trace_dict()["epsilon"] is None


def test_byte_identical_reruns_and_worker_independence(backend2d, identity2d, tmp_path):
    outputs = []
    for workers in (1, 1, 4):
        cfg = _cfg(voting=VotingConfig(1.5, 1.0, 2), workers=workers)
        pop, trace = run_unconditional(_private(31), cfg, backend2d, identity2d)
        path = tmp_path / f"trace_{len(outputs)}.jsonl"
        trace.to_jsonl(path)
        outputs.append((pop.coords.tobytes(), path.read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_retain_parents_doubles_population(backend2d, identity2d):
    cfg = _cfg(retain_parents=True, iterations=2, degree_schedule=VariationDegree.ramp(1, 2, 2))
    pop, _ = run_unconditional(_private(), cfg, backend2d, identity2d)
    assert len(pop) == 32  # parents + one offspring each


def test_trace_metrics_light_skips_expensive_fields(backend2d, identity2d):
    cfg = _cfg(trace_metrics="light")
    _, trace = run_unconditional(_private(), cfg, backend2d, identity2d)
    rec = trace.records[-1]
    assert rec.coverage_radius is not None
    assert rec.w1 is None and rec.frechet is None


def test_keep_intermediate_persists_every_population(backend2d, identity2d):
    cfg = _cfg(keep_intermediate=True)
    pop, trace = run_unconditional(_private(), cfg, backend2d, identity2d)
    assert len(trace.intermediates) == 5  # initial + one per iteration
    assert np.array_equal(trace.intermediates[-1].coords, pop.coords)


def test_conditional_size_contract_and_labels(backend2d, identity2d):
    labels = tuple("ab"[i % 2] for i in range(12))
    private = _private(12, labels=labels)
    cfg = _cfg(n_syn=10, conditional=True)
    pop, trace = run_conditional(private, cfg, backend2d, identity2d)
    assert len(pop) == 10
    assert pop.labels.count("a") == 5 and pop.labels.count("b") == 5
    assert len(trace.records) == 4


def test_conditional_requires_divisibility_and_labels(backend2d, identity2d):
    labels = tuple("ab"[i % 2] for i in range(12))
    with pytest.raises(ValueError, match="divisible"):
        run_conditional(_private(12, labels=labels), _cfg(n_syn=9, conditional=True), backend2d, identity2d)
    with pytest.raises(ValueError, match="labeled"):
        run_conditional(_private(12), _cfg(conditional=True), backend2d, identity2d)


def test_conditional_single_class_matches_class_stream(backend2d, identity2d):
    private = _private(8, labels=("a",) * 8)
    cfg = _cfg(n_syn=12, conditional=True)
    pop, trace = run_conditional(private, cfg, backend2d, identity2d)
    unlabeled = Dataset(private.coords)
    direct_pop, direct_trace = run_unconditional(
        unlabeled, dataclasses.replace(cfg, conditional=False), backend2d, identity2d,
        root=RngStream(cfg.seed, "class", "a"),
    )
    assert np.array_equal(pop.coords, direct_pop.coords)
    assert trace.epsilons == direct_trace.epsilons


def test_conditional_epsilon_equals_unconditional(backend2d, identity2d):
    labels = tuple("ab"[i % 2] for i in range(12))
    cfg = _cfg(voting=VotingConfig(2.0, 1.0, 0), n_syn=10)
    _, uncond = run_unconditional(_private(12), cfg, backend2d, identity2d)
    _, cond = run_conditional(
        _private(12, labels=labels), dataclasses.replace(cfg, conditional=True), backend2d, identity2d
    )
    assert cond.epsilons == uncond.epsilons
    assert cond.final_epsilon == uncond.final_epsilon


def test_generate_more_sizes_and_conditions(backend2d):
    syn = backend2d.random_api(100, condition="c", rng=RngStream(1))
    more = generate_more(syn, 3, backend2d, 2.0, RngStream(2))
    assert len(more) == 300
    assert more.conditions == ("c",) * 300
    assert len(generate_more(syn, 1, backend2d, 2.0, RngStream(2))) == 100
    with pytest.raises(ValueError):
        generate_more(syn, 0, backend2d, 2.0, RngStream(2))


def test_generate_more_is_post_processing(backend2d, identity2d):
    cfg = _cfg(voting=VotingConfig(2.0, 1.0, 0))
    pop, trace = run_unconditional(_private(), cfg, backend2d, identity2d)
    before = [r.epsilon for r in trace.records]
    generate_more(pop, 4, backend2d, 2.0, RngStream(9))
    assert [r.epsilon for r in trace.records] == before
    assert trace.final_epsilon == before[-1]


def test_schedule_must_cover_iterations():
    with pytest.raises(ValueError, match="schedule"):
        _cfg(iterations=9)

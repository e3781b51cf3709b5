import math

import numpy as np
import pytest

from dpevolve import (
    BackendError,
    BallWorld,
    HttpBackend,
    IDENTITY_DEGREE,
    Population,
    RngStream,
    Sample,
    BackendServer,
    SimulatedBackend,
    SimulatedBackendConfig,
    VariationDegree,
)


def test_variation_degree_schedule():
    sched = VariationDegree((1.0, 2.0, 3.0))
    assert sched.at(1) == 1.0 and sched.at(3) == 3.0
    with pytest.raises(IndexError):
        sched.at(4)
    with pytest.raises(ValueError):
        VariationDegree((1.0, 0.0))
    assert len(VariationDegree.ramp(1, 5, 9)) == 9


def test_num_scales_formula(ball2d):
    cfg = SimulatedBackendConfig(ball2d, variations_per_scale=2, eta=0.125)
    assert cfg.num_scales == 3  # ceil(log2(1 / 0.125))


def test_scale_sigma_matches_dyadic_formula(ball2d):
    cfg = SimulatedBackendConfig(ball2d, variations_per_scale=16, eta=0.05)
    for i in (1, 2, 3):
        expected = 1.0 * math.sqrt(math.log(16)) / (2**i * 2)
        assert cfg.scale_sigma(i) == pytest.approx(expected, rel=1e-12)
    assert cfg.scale_sigma(IDENTITY_DEGREE) == 0.0
    with pytest.raises(ValueError):
        cfg.scale_sigma(-1.0)


def test_random_api_ball_membership_and_counts(backend2d, ball2d):
    pop = backend2d.random_api(4, rng=RngStream(0).child("init"))
    assert len(pop) == 4
    assert ball2d.contains(pop.coords)
    with pytest.raises(ValueError):
        backend2d.random_api(0, rng=RngStream(0))


def test_random_api_deterministic(backend2d):
    a = backend2d.random_api(8, rng=RngStream(5).child("init"))
    b = backend2d.random_api(8, rng=RngStream(5).child("init"))
    assert np.array_equal(a.coords, b.coords)


def test_identity_degree_is_identity(backend2d):
    src = backend2d.random_api(5, rng=RngStream(1))
    out = backend2d.variation_api(src, IDENTITY_DEGREE, RngStream(2))
    assert np.array_equal(out.coords, src.coords)


def test_variation_grouping_and_conditions(backend2d):
    src = backend2d.random_api(3, condition="tag", rng=RngStream(1))
    out = backend2d.variation_api(src, IDENTITY_DEGREE, RngStream(2), count_per_sample=3)
    assert len(out) == 9
    assert out.conditions == ("tag",) * 9
    for i in range(3):
        block = out.coords[3 * i : 3 * (i + 1)]
        assert np.array_equal(block, np.repeat(src.coords[i][None, :], 3, axis=0))


def test_variation_rejects_empty_input(backend2d):
    empty = Population(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        backend2d.variation_api(empty, 1.0, RngStream(0))


def test_variation_batch_independent_substreams(backend2d):
    # per-source streams: the variation of sample i must not depend on the batch
    src = backend2d.random_api(4, rng=RngStream(3))
    full = backend2d.variation_api(src, 2.0, RngStream(9))
    # same source sample at the same index in a prefix batch
    prefix = Population(src.coords[:2])
    partial = backend2d.variation_api(prefix, 2.0, RngStream(9))
    assert np.array_equal(full.coords[:2], partial.coords)


def test_variation_empirical_std_matches_configured_sigma(ball2d):
    cfg = SimulatedBackendConfig(ball2d, variations_per_scale=16, eta=0.05, clip=False)
    backend = SimulatedBackend(cfg)
    target = 0.1
    degree = math.log2(ball2d.diameter * math.sqrt(math.log(16)) / (2 * target))
    assert cfg.scale_sigma(degree) == pytest.approx(target, rel=1e-12)
    src = Population(np.zeros((1, 2)))
    out = backend.variation_api(src, degree, RngStream(11), count_per_sample=10_000)
    stds = (out.coords - src.coords).std(axis=0, ddof=1)
    assert np.all(stds > 0.095) and np.all(stds < 0.105)


def test_clip_enforces_ball(ball2d):
    cfg = SimulatedBackendConfig(ball2d, variations_per_scale=4, eta=0.05, clip=True)
    backend = SimulatedBackend(cfg)
    edge = Population(np.array([[0.5, 0.0]]))
    out = backend.variation_api(edge, 1.0, RngStream(4), count_per_sample=500)
    assert ball2d.contains(out.coords)


def test_multi_scale_counts_and_dispersion(ball2d):
    cfg = SimulatedBackendConfig(ball2d, variations_per_scale=2, eta=0.125, clip=False)
    backend = SimulatedBackend(cfg)
    out = backend.multi_scale_variation(Sample(np.zeros(2)), RngStream(0))
    assert len(out) == 2 * 3  # L * r

    big = SimulatedBackend(
        SimulatedBackendConfig(ball2d, variations_per_scale=1000, eta=0.05, clip=False)
    )
    cloud = big.multi_scale_variation(Sample(np.zeros(2)), RngStream(1))
    L, r = 1000, big.config.num_scales
    spreads = [
        np.linalg.norm(cloud.coords[i * L : (i + 1) * L], axis=1).mean() for i in range(r)
    ]
    # sigma halves per scale, so the per-scale mean radius must strictly fall
    assert all(a > b for a, b in zip(spreads, spreads[1:]))


def test_http_backend_round_trip(ball2d):
    backend = SimulatedBackend(SimulatedBackendConfig(ball2d, 8, 0.05))
    with BackendServer(backend) as server:
        client = HttpBackend(server.endpoint, dimension=2)
        pop = client.random_api(6, condition="c", rng=RngStream(2).child("init"))
        assert len(pop) == 6 and pop.conditions == ("c",) * 6
        assert ball2d.contains(pop.coords)

        again = client.random_api(6, condition="c", rng=RngStream(2).child("init"))
        assert np.array_equal(pop.coords, again.coords)

        out = client.variation_api(pop, IDENTITY_DEGREE, RngStream(3), count_per_sample=2)
        assert len(out) == 12
        for i in range(6):
            block = out.coords[2 * i : 2 * (i + 1)]
            assert np.array_equal(block, np.repeat(pop.coords[i][None, :], 2, axis=0))

        with pytest.raises(ValueError):
            client.random_api(0, rng=RngStream(1))
        with pytest.raises(BackendError):
            client._post("/nope", {})
    with pytest.raises(BackendError, match="unreachable"):
        client.random_api(1, rng=RngStream(1))

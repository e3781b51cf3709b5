import math

import numpy as np
import pytest

from dpevolve import (
    VoteHistogram,
    coverage_radius,
    frechet_distance,
    histogram_std,
    intrinsic_dimension,
    nn_distance_cdf,
    optimal_coupling,
    w1_transport,
    wasserstein_p,
)
from oracles import (
    brute_force_wasserstein,
    double_loop_coverage,
    double_loop_nn_distances,
    two_pass_std,
)


def test_wasserstein_identity():
    gen = np.random.default_rng(0)
    pts = gen.standard_normal((6, 3))
    for p in (1.0, 2.0, math.inf):
        assert wasserstein_p(pts, pts, p) == pytest.approx(0.0, abs=1e-12)


def test_wasserstein_forced_matching_1d():
    a = np.array([[0.0], [1.0]])
    b = np.array([[0.5], [0.5]])
    for p in (1.0, 2.0, 3.0, math.inf):
        assert wasserstein_p(a, b, p) == pytest.approx(0.5, abs=1e-12)


def test_wasserstein_matches_brute_force():
    gen = np.random.default_rng(7)
    for trial in range(100):
        n = int(gen.integers(1, 8))
        dim = int(gen.integers(1, 4))
        a = gen.standard_normal((n, dim))
        b = gen.standard_normal((n, dim))
        p = [1.0, 2.0, math.inf][trial % 3]
        assert wasserstein_p(a, b, p) == pytest.approx(
            brute_force_wasserstein(a, b, p), abs=1e-9
        )


def test_wasserstein_metric_axioms_on_sampled_triples():
    gen = np.random.default_rng(11)
    for _ in range(20):
        n = int(gen.integers(2, 6))
        a, b, c = (gen.standard_normal((n, 2)) for _ in range(3))
        for p in (1.0, 2.0, math.inf):
            dab = wasserstein_p(a, b, p)
            assert dab == pytest.approx(wasserstein_p(b, a, p), abs=1e-12)
            assert dab >= 0
            assert dab <= wasserstein_p(a, c, p) + wasserstein_p(c, b, p) + 1e-9


def test_wasserstein_requirements():
    with pytest.raises(ValueError, match="equal sizes"):
        wasserstein_p(np.zeros((2, 1)), np.zeros((3, 1)))
    with pytest.raises(ValueError, match="capped"):
        wasserstein_p(np.zeros((257, 1)), np.zeros((257, 1)))
    # override hint is honored
    pts = np.random.default_rng(0).standard_normal((257, 1))
    assert wasserstein_p(pts, pts, exact_cap=257) == pytest.approx(0.0)
    with pytest.raises(ValueError, match="empty"):
        wasserstein_p(np.zeros((0, 1)), np.zeros((0, 1)))
    with pytest.raises(ValueError):
        wasserstein_p(np.zeros((2, 1)), np.zeros((2, 1)), p=0.5)


def test_coupling_is_perfect_matching():
    gen = np.random.default_rng(2)
    a, b = gen.standard_normal((5, 2)), gen.standard_normal((5, 2))
    coupling = optimal_coupling(a, b, p=2.0)
    assert sorted(i for i, _ in coupling.assignment) == list(range(5))
    assert sorted(j for _, j in coupling.assignment) == list(range(5))
    dist = np.linalg.norm(a[:, None] - b[None, :], axis=2)
    recomputed = (sum(dist[i, j] ** 2 for i, j in coupling.assignment) / 5) ** 0.5
    assert coupling.cost == pytest.approx(recomputed, abs=1e-12)


def test_w_infinity_at_least_coverage_for_equal_sizes():
    gen = np.random.default_rng(3)
    for _ in range(10):
        a, b = gen.standard_normal((6, 2)), gen.standard_normal((6, 2))
        assert wasserstein_p(a, b, math.inf) >= coverage_radius(a, b) - 1e-12


def test_w1_transport_equal_sizes_matches_assignment():
    gen = np.random.default_rng(4)
    a, b = gen.standard_normal((8, 2)), gen.standard_normal((8, 2))
    assert w1_transport(a, b) == pytest.approx(wasserstein_p(a, b, 1.0), abs=1e-9)


def test_w1_transport_replication_invariance():
    # uniform-multiset semantics: replicating one side must not change W1
    gen = np.random.default_rng(5)
    a = gen.standard_normal((4, 2))
    b = gen.standard_normal((6, 2))
    base = w1_transport(a, b)
    assert w1_transport(np.repeat(a, 3, axis=0), b) == pytest.approx(base, abs=1e-9)
    # and with equal-size replication it matches exact assignment on the lcm
    lcm_a = np.repeat(a, 3, axis=0)
    lcm_b = np.repeat(b, 2, axis=0)
    assert base == pytest.approx(wasserstein_p(lcm_a, lcm_b, 1.0), abs=1e-9)


def test_coverage_radius_cases():
    private = np.array([[0.0]])
    generated = np.array([[1.0], [3.0]])
    assert coverage_radius(private, generated) == pytest.approx(1.0)
    # generated superset of private covers exactly
    pts = np.random.default_rng(0).standard_normal((5, 3))
    assert coverage_radius(pts, np.vstack([pts, pts + 10])) == pytest.approx(0.0)


def test_coverage_radius_matches_double_loop():
    gen = np.random.default_rng(6)
    for _ in range(100):
        a = gen.standard_normal((int(gen.integers(1, 12)), 3))
        b = gen.standard_normal((int(gen.integers(1, 12)), 3))
        assert coverage_radius(a, b) == pytest.approx(double_loop_coverage(a, b), abs=1e-12)


def test_frechet_identity_and_symmetry():
    gen = np.random.default_rng(8)
    a = gen.standard_normal((30, 4))
    b = gen.standard_normal((25, 4)) + 0.5
    assert frechet_distance(a, a) == pytest.approx(0.0, abs=1e-9)
    assert frechet_distance(a, b) == pytest.approx(frechet_distance(b, a), abs=1e-9)
    assert frechet_distance(a, b) >= 0


def test_frechet_1d_closed_form():
    gen = np.random.default_rng(9)
    a = gen.standard_normal((400, 1))
    b = 2.0 * gen.standard_normal((400, 1)) + 1.0
    mu1, mu2 = a.mean(), b.mean()
    s1, s2 = a.std(ddof=1), b.std(ddof=1)
    expected = (mu1 - mu2) ** 2 + (s1 - s2) ** 2
    assert frechet_distance(a, b) == pytest.approx(float(expected), abs=1e-9)


def test_frechet_equal_covariance_mean_shift():
    gen = np.random.default_rng(10)
    a = gen.standard_normal((60, 3))
    shift = np.array([0.3, -1.0, 2.0])
    assert frechet_distance(a, a + shift) == pytest.approx(float(shift @ shift), abs=1e-9)


def test_frechet_requires_two_samples():
    with pytest.raises(ValueError):
        frechet_distance(np.zeros((1, 2)), np.zeros((5, 2)))


def test_nn_distance_cdf():
    gen = np.random.default_rng(12)
    a = gen.standard_normal((15, 2))
    b = gen.standard_normal((9, 2))
    got = nn_distance_cdf(a, b)
    np.testing.assert_allclose(got, double_loop_nn_distances(a, b), atol=1e-12)
    assert np.all(np.diff(got) >= 0) and np.all(got >= 0)
    assert nn_distance_cdf(a, a).tolist() == [0.0] * 15
    x, y = np.array([[0.0, 0.0]]), np.array([[3.0, 4.0]])
    assert nn_distance_cdf(x, y).tolist() == [5.0]


def test_intrinsic_dimension_rank_one():
    gen = np.random.default_rng(13)
    direction = gen.standard_normal(20)
    points = np.outer(gen.uniform(-1, 1, size=50), direction)
    assert intrinsic_dimension(points, 0.8) == 1


def test_intrinsic_dimension_equal_singular_values():
    # +I/-I rows are centered with all singular values equal in 10-D
    mat = np.vstack([np.eye(10), -np.eye(10)])
    assert intrinsic_dimension(mat, 0.8) == 8
    assert intrinsic_dimension(mat, 1.0) == 10
    assert intrinsic_dimension(mat, 0.1) == 1


def test_intrinsic_dimension_degenerate():
    assert intrinsic_dimension(np.ones((7, 5)), 0.8) == 0
    with pytest.raises(ValueError):
        intrinsic_dimension(np.ones((1, 5)), 0.8)
    with pytest.raises(ValueError):
        intrinsic_dimension(np.ones((3, 5)), 0.0)


def test_histogram_std():
    h = VoteHistogram(np.array([2.0, 0.0]), np.array([2.0, 0.0]), np.array([2.0, 0.0]))
    raw_std, rel_std = histogram_std(h)
    assert raw_std == pytest.approx(1.0)
    assert rel_std == pytest.approx(1.0)
    uniform = VoteHistogram(np.array([3.0, 3.0, 3.0]), np.zeros(3), np.zeros(3))
    assert histogram_std(uniform)[0] == 0.0

    gen = np.random.default_rng(14)
    raw = np.round(gen.uniform(0, 30, size=17))
    h = VoteHistogram(raw, raw + 0.5, np.maximum(raw - 2, 0.0))
    raw_std, rel_std = histogram_std(h)
    assert raw_std == pytest.approx(two_pass_std(raw), abs=1e-12)
    assert rel_std == pytest.approx(two_pass_std(np.maximum(raw - 2, 0.0)), abs=1e-12)

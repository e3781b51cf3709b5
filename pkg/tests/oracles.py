"""Independent reference implementations used only by the tests.

These deliberately avoid the library's code paths: the accountant oracle
integrates the two mechanism densities numerically with mpmath, the
Wasserstein oracle enumerates all permutations, and the nearest-neighbor
oracles are plain double loops.
"""

import itertools
import math

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def delta_quadrature(sigma_eff: float, epsilon: float) -> float:
    """delta for the unit-sensitivity Gaussian mechanism by direct quadrature.

    Integrates max(p(x) - e^eps q(x), 0) where p = N(0, s^2), q = N(1, s^2);
    the integrand is positive exactly on (-inf, 1/2 - s^2 eps].
    """
    s = mp.mpf(sigma_eff)
    eps = mp.mpf(epsilon)
    xstar = mp.mpf("0.5") - s * s * eps
    norm = 1 / (s * mp.sqrt(2 * mp.pi))

    def integrand(x):
        return norm * (mp.exp(-(x**2) / (2 * s * s)) - mp.exp(eps - ((x - 1) ** 2) / (2 * s * s)))

    value = mp.quad(integrand, [-mp.inf, xstar])
    return float(value)


def brute_force_wasserstein(a: np.ndarray, b: np.ndarray, p: float) -> float:
    """Minimum over all n! assignments; only feasible for n <= 8."""
    n = len(a)
    dist = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    best = math.inf
    for perm in itertools.permutations(range(n)):
        costs = [dist[i, perm[i]] for i in range(n)]
        if p == math.inf:
            value = max(costs)
        else:
            value = (sum(c**p for c in costs) / n) ** (1.0 / p)
        best = min(best, value)
    return best


def double_loop_votes(private: np.ndarray, population: np.ndarray) -> np.ndarray:
    votes = np.zeros(len(population), dtype=np.int64)
    for x in private:
        best_j, best_d = 0, math.inf
        for j, z in enumerate(population):
            d = float(np.sqrt(((x - z) ** 2).sum()))
            if d < best_d:
                best_j, best_d = j, d
        votes[best_j] += 1
    return votes


def double_loop_coverage(private: np.ndarray, generated: np.ndarray) -> float:
    worst = 0.0
    for x in private:
        best = min(float(np.linalg.norm(x - z)) for z in generated)
        worst = max(worst, best)
    return worst


def double_loop_nn_distances(frm: np.ndarray, to: np.ndarray) -> np.ndarray:
    out = [min(float(np.linalg.norm(x - z)) for z in to) for x in frm]
    return np.sort(np.array(out))


def two_pass_std(values: np.ndarray) -> float:
    mean = sum(float(v) for v in values) / len(values)
    var = sum((float(v) - mean) ** 2 for v in values) / len(values)
    return math.sqrt(var)

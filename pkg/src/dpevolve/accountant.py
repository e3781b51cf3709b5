"""Exact privacy accounting for composed Gaussian mechanisms.

The evolution loop touches private data once per iteration, through a
histogram of sensitivity 1 privatized with Gaussian noise of standard
deviation sigma. T adaptive compositions of that mechanism are exactly
equivalent to a single Gaussian mechanism with noise multiplier
``sigma / sqrt(T)``, so conversion to (epsilon, delta) reduces to the
analytic expression for one Gaussian mechanism:

    delta(eps) = Phi(1/(2s) - eps*s) - exp(eps) * Phi(-1/(2s) - eps*s)

with ``s`` the effective noise multiplier (per unit sensitivity) and Phi the
standard normal CDF. The second term is evaluated in log space; in the deep
tail (delta near 1e-5 and below) the naive difference cancels to zero
precision while this form keeps full relative accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import log_ndtr

__all__ = [
    "PrivacySpec",
    "effective_sigma",
    "delta_for_epsilon",
    "epsilon_for_delta",
    "sigma_for_budget",
]

# Bisection brackets; generous enough for any sane configuration.
_EPS_HI = 500.0
_SIGMA_EFF_LO = 1e-12
_SIGMA_EFF_HI = 1e9


def effective_sigma(sigma: float, iterations: int) -> float:
    """Noise multiplier of the single mechanism equivalent to T compositions."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    return sigma / math.sqrt(iterations)


def delta_for_epsilon(sigma_eff: float, epsilon: float, sensitivity: float = 1.0) -> float:
    """Smallest delta for which the mechanism is (epsilon, delta)-DP.

    Strictly decreasing in both ``epsilon`` and ``sigma_eff``.
    """
    if sigma_eff <= 0:
        raise ValueError("sigma_eff must be > 0")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if sensitivity <= 0:
        raise ValueError("sensitivity must be > 0")
    s = sigma_eff / sensitivity
    a = 0.5 / s - epsilon * s
    b = -0.5 / s - epsilon * s
    log_hit = log_ndtr(a)
    log_miss = epsilon + log_ndtr(b)
    if log_hit == -math.inf:
        return 0.0
    # delta = exp(log_hit) - exp(log_miss), with log_miss < log_hit always
    return -math.exp(log_hit) * math.expm1(log_miss - log_hit)


def epsilon_for_delta(sigma_eff: float, delta: float, sensitivity: float = 1.0) -> float:
    """The unique epsilon >= 0 with ``delta_for_epsilon(sigma_eff, eps) == delta``.

    Returns 0 when ``delta`` already meets or exceeds the delta at eps = 0.
    Bisected to an epsilon tolerance of 1e-10, which bounds the delta
    round-trip error by the same amount.
    """
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if delta >= 1:
        raise ValueError("delta must be < 1")
    if delta >= delta_for_epsilon(sigma_eff, 0.0, sensitivity):
        return 0.0
    lo, hi = 0.0, _EPS_HI
    if delta_for_epsilon(sigma_eff, hi, sensitivity) > delta:
        raise ValueError(
            f"epsilon bracket [0, {_EPS_HI}] exhausted for sigma_eff={sigma_eff}, delta={delta}"
        )
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if delta_for_epsilon(sigma_eff, mid, sensitivity) > delta:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sigma_for_budget(epsilon: float, delta: float, iterations: int) -> float:
    """Smallest per-iteration sigma giving (epsilon, delta)-DP after T iterations.

    Bisects the effective noise multiplier and scales by sqrt(T), so doubling
    T scales the result by exactly sqrt(2) up to float rounding.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    lo, hi = _SIGMA_EFF_LO, _SIGMA_EFF_HI
    if delta_for_epsilon(hi, epsilon) > delta:
        raise ValueError(f"budget ({epsilon}, {delta}) infeasible within sigma bracket")
    if delta_for_epsilon(lo, epsilon) <= delta:
        return lo * math.sqrt(iterations)
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if delta_for_epsilon(mid, epsilon) <= delta:
            hi = mid
        else:
            lo = mid
    return hi * math.sqrt(iterations)


@dataclass(frozen=True)
class PrivacySpec:
    """Per-iteration noise multiplier with iteration count and target delta."""

    sigma: float
    iterations: int
    delta: float
    sensitivity: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0 for any nonzero privacy claim")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must be in (0, 1)")

    @property
    def effective_sigma(self) -> float:
        return effective_sigma(self.sigma, self.iterations)

    @property
    def epsilon(self) -> float:
        return epsilon_for_delta(self.effective_sigma, self.delta, self.sensitivity)

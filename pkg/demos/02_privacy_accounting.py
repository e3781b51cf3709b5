"""Privacy accounting walkthrough.

The loop touches private data once per iteration through a sensitivity-1
histogram plus Gaussian noise, so T iterations compose into a single
Gaussian mechanism with noise multiplier sigma / sqrt(T). Everything else
is conversion between that multiplier and (epsilon, delta).
"""

import math

import dpevolve as dp

# composing T rounds is exactly one mechanism at sigma / sqrt(T)
sigma, T, delta = 10 * math.sqrt(2), 5, 1e-5
eff = dp.effective_sigma(sigma, T)
print(f"sigma={sigma:.6f} over T={T} rounds -> effective sigma {eff:.6f}")

eps = dp.epsilon_for_delta(eff, delta)
print(f"(epsilon, delta) = ({eps:.6f}, {delta})")

# the forward direction: delta as a function of epsilon, strictly decreasing
for e in (0.0, 0.25, 0.5, 1.0, 2.0):
    print(f"  delta(epsilon={e:4.2f}) = {dp.delta_for_epsilon(eff, e):.3e}")

# inverse planning: smallest per-round sigma meeting a budget
for T_plan in (1, 5, 10, 20):
    s = dp.sigma_for_budget(1.0, 1e-5, T_plan)
    print(f"budget (1.0, 1e-5) over {T_plan:>2} rounds needs sigma >= {s:.4f}")

# doubling the rounds costs exactly sqrt(2) in noise
s1 = dp.sigma_for_budget(1.0, 1e-5, 8)
s2 = dp.sigma_for_budget(1.0, 1e-5, 16)
print(f"sigma ratio for doubled T: {s2 / s1:.9f} (sqrt(2) = {math.sqrt(2):.9f})")

# the composition identity the schedule relies on
spec = dp.PrivacySpec(sigma=3.0, iterations=9, delta=1e-6)
same = dp.PrivacySpec(sigma=spec.effective_sigma, iterations=1, delta=1e-6)
print(f"account (3.0, T=9) -> {spec.epsilon:.9f}; account (1.0, T=1) -> {same.epsilon:.9f}")

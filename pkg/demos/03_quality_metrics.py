"""Tour of the quality and diagnostic metrics on small point sets."""

import math

import numpy as np

import dpevolve as dp

gen = np.random.default_rng(3)

# --- exact Wasserstein distances via optimal assignment ---------------------
a = gen.standard_normal((30, 2))
b = a + np.array([0.5, 0.0])  # pure translation
for p in (1.0, 2.0, math.inf):
    print(f"W_{p}: translated cloud -> {dp.wasserstein_p(a, b, p):.6f} (expect 0.5)")

# the coupling itself is available, e.g. to inspect which points matched
coupling = dp.optimal_coupling(a[:5], b[:5], p=2.0)
print("matched pairs:", coupling.assignment)

# unequal sizes: the transportation solver keeps uniform-multiset semantics
big = np.repeat(a, 3, axis=0)
print(f"W1 with one side replicated x3: {dp.w1_transport(big, b):.6f} (unchanged)")

# --- directed coverage: the quantity the convergence analysis bounds --------
private = gen.uniform(-0.4, 0.4, size=(25, 2))
generated = gen.uniform(-0.5, 0.5, size=(200, 2))
print(f"coverage radius (private -> generated): {dp.coverage_radius(private, generated):.4f}")
print(f"coverage radius (generated -> private): {dp.coverage_radius(generated, private):.4f}")

# --- Frechet distance between Gaussian fits ---------------------------------
x = gen.standard_normal((500, 3))
y = 1.5 * gen.standard_normal((500, 3)) + np.array([1.0, 0.0, 0.0])
print(f"frechet(x, x) = {dp.frechet_distance(x, x):.2e}")
print(f"frechet(x, y) = {dp.frechet_distance(x, y):.4f}")

# --- nearest-neighbor distance profile ---------------------------------------
cdf = dp.nn_distance_cdf(generated, private)
print("NN-distance percentiles (generated -> private):",
      {q: round(float(np.percentile(cdf, q)), 4) for q in (25, 50, 75, 100)})

# --- intrinsic dimension of a variation cloud --------------------------------
ball = dp.BallWorld(np.zeros(8), 1.0)
backend = dp.SimulatedBackend(dp.SimulatedBackendConfig(ball, 64, 0.05, clip=False))
cloud = backend.multi_scale_variation(dp.Sample(np.zeros(8)), dp.RngStream(0))
print(f"intrinsic dimension of an isotropic 8-D cloud: "
      f"{dp.intrinsic_dimension(cloud.coords, 0.8)}")

plane = cloud.coords.copy()
plane[:, 2:] = 0.0  # collapse onto a 2-D subspace
print(f"after collapsing onto a plane: {dp.intrinsic_dimension(plane, 0.8)}")

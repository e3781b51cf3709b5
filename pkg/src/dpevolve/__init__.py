"""Differentially private synthetic data from blackbox generation APIs.

The package evolves a population of generated samples toward a private
dataset using only two backend calls (fresh sampling and sample variation),
privatizing the single data-touching step, a nearest-neighbor vote
histogram, with the Gaussian mechanism. Exact accounting, quality metrics,
and a convergence harness round out the library.
"""

from .accountant import (
    PrivacySpec,
    delta_for_epsilon,
    effective_sigma,
    epsilon_for_delta,
    sigma_for_budget,
)
from .core import (
    BallWorld,
    DataFormatError,
    Dataset,
    Population,
    Sample,
    VoteHistogram,
    load_dataset,
    save_dataset,
)
from .embedding import Embedder, lookahead_embedding
from .engine import (
    EngineConfig,
    IterationRecord,
    RunTrace,
    generate_more,
    run_conditional,
    run_unconditional,
)
from .genapi import (
    IDENTITY_DEGREE,
    BackendError,
    BackendServer,
    HttpBackend,
    SimulatedBackend,
    SimulatedBackendConfig,
    VariationDegree,
    serve_backend,
)
from .metrics import (
    Coupling,
    coverage_radius,
    frechet_distance,
    histogram_std,
    intrinsic_dimension,
    nn_distance_cdf,
    optimal_coupling,
    w1_transport,
    wasserstein_p,
)
from .rng import RngStream
from .theory import (
    SweepBase,
    TheoryWorld,
    TrialResult,
    build_world,
    random_support,
    run_nonprivate_trial,
    run_private_trial,
    suggest_noisy_regime,
    sweep,
    write_sweep_csv,
)
from .voting import VotingConfig, dp_nn_histogram, nn_histogram

__version__ = "0.1.0"

__all__ = [
    "PrivacySpec",
    "delta_for_epsilon",
    "effective_sigma",
    "epsilon_for_delta",
    "sigma_for_budget",
    "BallWorld",
    "DataFormatError",
    "Dataset",
    "Population",
    "Sample",
    "VoteHistogram",
    "load_dataset",
    "save_dataset",
    "Embedder",
    "lookahead_embedding",
    "EngineConfig",
    "IterationRecord",
    "RunTrace",
    "generate_more",
    "run_conditional",
    "run_unconditional",
    "IDENTITY_DEGREE",
    "BackendError",
    "BackendServer",
    "HttpBackend",
    "SimulatedBackend",
    "SimulatedBackendConfig",
    "VariationDegree",
    "serve_backend",
    "Coupling",
    "coverage_radius",
    "frechet_distance",
    "histogram_std",
    "intrinsic_dimension",
    "nn_distance_cdf",
    "optimal_coupling",
    "w1_transport",
    "wasserstein_p",
    "RngStream",
    "SweepBase",
    "TheoryWorld",
    "TrialResult",
    "build_world",
    "random_support",
    "run_nonprivate_trial",
    "run_private_trial",
    "suggest_noisy_regime",
    "sweep",
    "write_sweep_csv",
    "VotingConfig",
    "dp_nn_histogram",
    "nn_histogram",
]

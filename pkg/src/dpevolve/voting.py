"""Differentially private nearest-neighbor voting.

Each private sample casts one vote for its nearest population member in
embedding space. The resulting per-member histogram has L2 sensitivity 1
under add/remove of a private sample (one vote appears or disappears), so a
single Gaussian-noise pass privatizes it; a threshold H is then subtracted
with clamping at zero to suppress noise-only bins.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Dataset, Population, VoteHistogram
from .embedding import Embedder
from .rng import RngStream

__all__ = ["VotingConfig", "nn_histogram", "dp_nn_histogram"]

# Private rows are processed in fixed-size blocks so the arithmetic (and
# therefore any near-tie resolution) is identical for every worker count.
_BLOCK = 512


@dataclass(frozen=True)
class VotingConfig:
    """Noise multiplier, threshold, and lookahead degree for one vote round."""

    sigma: float = 0.0
    threshold: float = 0.0
    lookahead_k: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.lookahead_k < 0:
            raise ValueError("lookahead_k must be >= 0")


def _as_matrix(obj) -> np.ndarray:
    if isinstance(obj, (Dataset, Population)):
        return obj.coords
    return np.asarray(obj, dtype=np.float64)


def _block_votes(block: np.ndarray, population: np.ndarray, pop_sq: np.ndarray, n: int) -> np.ndarray:
    d2 = (
        np.einsum("ij,ij->i", block, block)[:, None]
        - 2.0 * (block @ population.T)
        + pop_sq[None, :]
    )
    # argmin resolves exact ties toward the lowest index
    return np.bincount(np.argmin(d2, axis=1), minlength=n).astype(np.int64)


def nn_histogram(private, population_embeddings, workers: int = 1) -> np.ndarray:
    """Exact nearest-neighbor vote counts.

    Args:
        private: (N, e) array (or Dataset) of private embeddings.
        population_embeddings: (n, e) array of candidate embeddings.
        workers: thread count; partial integer histograms are merged
            exactly, so the result never depends on this value.

    Returns:
        int64 array of length n with ``sum == N``.
    """
    priv = _as_matrix(private)
    pop = _as_matrix(population_embeddings)
    if pop.shape[0] == 0:
        raise ValueError("population must be nonempty")
    if priv.shape[0] == 0:
        raise ValueError("private set must be nonempty")
    if priv.shape[1] != pop.shape[1]:
        raise ValueError(
            f"embedding dims differ: private {priv.shape[1]}, population {pop.shape[1]}"
        )
    pop_sq = np.einsum("ij,ij->i", pop, pop)
    n = pop.shape[0]
    blocks = [priv[start : start + _BLOCK] for start in range(0, priv.shape[0], _BLOCK)]
    if workers <= 1 or len(blocks) == 1:
        partials = [_block_votes(b, pop, pop_sq, n) for b in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(lambda b: _block_votes(b, pop, pop_sq, n), blocks))
    return np.sum(partials, axis=0, dtype=np.int64)


def population_embeddings(
    population: Population,
    cfg: VotingConfig,
    embedder: Embedder,
    api=None,
    degree: float = 0.0,
    rng: Optional[RngStream] = None,
) -> np.ndarray:
    """Candidate embeddings, with lookahead when ``cfg.lookahead_k > 0``.

    Lookahead variations are drawn in one grouped backend call; candidate j
    uses the ("lookahead", j) substream, disjoint from offspring streams.
    The variations feed only these means and are then discarded.
    """
    if cfg.lookahead_k == 0:
        return embedder.embed_many(population.coords)
    if api is None or rng is None:
        raise ValueError("lookahead requires a variation backend and a seeded stream")
    variations = api.variation_api(
        population, degree, rng.child("lookahead"), count_per_sample=cfg.lookahead_k
    )
    embedded = embedder.embed_many(variations.coords)
    grouped = embedded.reshape(len(population), cfg.lookahead_k, embedder.output_dim)
    return grouped.mean(axis=1)


def dp_nn_histogram(
    private: Dataset,
    population: Population,
    cfg: VotingConfig,
    embedder: Embedder,
    api=None,
    rng: Optional[RngStream] = None,
    degree: float = 0.0,
    private_embeddings: Optional[np.ndarray] = None,
    workers: int = 1,
) -> VoteHistogram:
    """Noisy, thresholded nearest-neighbor histogram.

    Private samples are embedded directly; population members use the
    lookahead embedding with ``cfg.lookahead_k`` variations at ``degree``.
    Noise is N(0, sigma^2) i.i.d. per bin from one substream in bin order,
    and the released vector is ``max(noisy - threshold, 0)``.

    ``private_embeddings`` may be passed to reuse embeddings across
    iterations; it must equal ``embedder.embed_many(private.coords)``.
    """
    if rng is None:
        raise ValueError("dp_nn_histogram requires a seeded stream")
    if private_embeddings is None:
        private_embeddings = embedder.embed_many(private.coords)
    pop_emb = population_embeddings(population, cfg, embedder, api, degree, rng)
    raw = nn_histogram(private_embeddings, pop_emb, workers=workers)
    noise_gen = rng.child("noise").generator()
    noisy = raw + cfg.sigma * noise_gen.standard_normal(len(population))
    released = np.maximum(noisy - cfg.threshold, 0.0)
    return VoteHistogram(raw=raw.astype(np.float64), noisy=noisy, released=released)

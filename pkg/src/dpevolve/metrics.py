"""Quality and diagnostic metrics.

Exact Wasserstein distances between equal-size uniform multisets reduce to
an optimal assignment on the pairwise cost matrix (bottleneck matching for
p = infinity); a transportation LP covers unequal sizes for W1. The
remaining metrics are the directed coverage radius driven to zero by the
convergence analysis, a Frechet distance between Gaussian fits of embedding
clouds, nearest-neighbor distance CDFs, an SVD-based intrinsic-dimension
estimate, and vote-histogram dispersion.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

from .core import Dataset, Population, VoteHistogram
from .embedding import Embedder

__all__ = [
    "Coupling",
    "wasserstein_p",
    "optimal_coupling",
    "w1_transport",
    "coverage_radius",
    "frechet_distance",
    "nn_distance_cdf",
    "intrinsic_dimension",
    "histogram_std",
]

logger = logging.getLogger(__name__)

DEFAULT_EXACT_CAP = 256


def _coords(obj, embedder: Optional[Embedder] = None) -> np.ndarray:
    if isinstance(obj, (Dataset, Population)):
        arr = obj.coords
    else:
        arr = np.atleast_2d(np.asarray(obj, dtype=np.float64))
    if embedder is not None:
        arr = embedder.embed_many(arr)
    return arr


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b)


@dataclass(frozen=True)
class Coupling:
    """A perfect matching between two equal-size multisets and its W_p value."""

    assignment: tuple  # pairs (i, j), one per row of A
    cost: float
    p: float


def _bottleneck_assignment(dist: np.ndarray) -> Tuple[np.ndarray, float]:
    """Perfect matching minimizing the largest matched distance."""
    n = dist.shape[0]
    values = np.unique(dist)
    lo, hi = 0, len(values) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        graph = sparse.csr_matrix(dist <= values[mid])
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            best = (match.copy(), float(values[mid]))
            hi = mid - 1
        else:
            lo = mid + 1
    if best is None:  # cannot happen: the full graph always matches
        raise RuntimeError("bottleneck matching failed")
    return best


def optimal_coupling(
    a,
    b,
    p: float = 1.0,
    embedder: Optional[Embedder] = None,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> Coupling:
    """Optimal perfect matching between equal-size multisets under d^p cost.

    Requires ``len(a) == len(b) <= exact_cap`` (cubic-time matching); pass a
    larger ``exact_cap`` to opt in to bigger instances.
    """
    if p != math.inf and p < 1:
        raise ValueError("p must be >= 1 or inf")
    xa = _coords(a, embedder)
    xb = _coords(b, embedder)
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        raise ValueError("empty input")
    if xa.shape[0] != xb.shape[0]:
        raise ValueError(
            f"exact mode requires equal sizes, got {xa.shape[0]} and {xb.shape[0]}"
        )
    n = xa.shape[0]
    if n > exact_cap:
        raise ValueError(
            f"exact mode capped at {exact_cap} points (got {n}); "
            f"pass exact_cap={n} to override"
        )
    dist = _pairwise(xa, xb)
    if p == math.inf:
        cols, value = _bottleneck_assignment(dist)
        pairs = tuple((i, int(cols[i])) for i in range(n))
        return Coupling(pairs, value, p)
    rows, cols = linear_sum_assignment(dist**p)
    value = float((dist[rows, cols] ** p).sum() / n) ** (1.0 / p)
    pairs = tuple((int(i), int(j)) for i, j in zip(rows, cols))
    return Coupling(pairs, value, p)


def wasserstein_p(
    a,
    b,
    p: float = 1.0,
    embedder: Optional[Embedder] = None,
    exact_cap: int = DEFAULT_EXACT_CAP,
) -> float:
    """Exact W_p between equal-size uniform multisets (p in [1, inf])."""
    return optimal_coupling(a, b, p, embedder, exact_cap).cost


def w1_transport(a, b, embedder: Optional[Embedder] = None) -> float:
    """Exact W1 between uniform multisets of possibly different sizes.

    Solves the transportation linear program with supplies 1/n and demands
    1/m; used where populations and private sets differ in size. Falls back
    to the assignment solver when the sizes happen to match.
    """
    xa = _coords(a, embedder)
    xb = _coords(b, embedder)
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        raise ValueError("empty input")
    n, m = xa.shape[0], xb.shape[0]
    if n == m and n <= DEFAULT_EXACT_CAP:
        return wasserstein_p(xa, xb, 1.0)
    dist = _pairwise(xa, xb)
    row_idx = np.repeat(np.arange(n), m)
    col_idx = np.tile(np.arange(m), n) + n
    var_idx = np.arange(n * m)
    a_eq = sparse.coo_matrix(
        (
            np.ones(2 * n * m),
            (np.concatenate([row_idx, col_idx]), np.concatenate([var_idx, var_idx])),
        ),
        shape=(n + m, n * m),
    ).tocsr()
    b_eq = np.concatenate([np.full(n, 1.0 / n), np.full(m, 1.0 / m)])
    res = linprog(dist.ravel(), A_eq=a_eq, b_eq=b_eq, method="highs")
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    return float(res.fun)


def coverage_radius(private, generated, embedder: Optional[Embedder] = None) -> float:
    """max over private points of the distance to the nearest generated point.

    This directed quantity is what the convergence analysis drives below the
    target resolution; it is not symmetric.
    """
    xp = _coords(private, embedder)
    xg = _coords(generated, embedder)
    if xp.shape[0] == 0 or xg.shape[0] == 0:
        raise ValueError("empty input")
    return float(_pairwise(xp, xg).min(axis=1).max())


def nn_distance_cdf(frm, to, embedder: Optional[Embedder] = None) -> np.ndarray:
    """Sorted distances from each sample in ``frm`` to its nearest in ``to``."""
    xa = _coords(frm, embedder)
    xb = _coords(to, embedder)
    if xa.shape[0] == 0 or xb.shape[0] == 0:
        raise ValueError("empty input")
    return np.sort(_pairwise(xa, xb).min(axis=1))


def _psd_sqrt_trace(sigma1: np.ndarray, sigma2: np.ndarray) -> Tuple[float, float]:
    """tr((S1^{1/2} S2 S1^{1/2})^{1/2}) with negative eigenvalue clamping.

    Returns (trace, clamped_mass); the product is symmetrized before the
    square root so numerical noise cannot push the trace complex.
    """
    vals1, vecs1 = np.linalg.eigh((sigma1 + sigma1.T) / 2.0)
    clamped = float(-vals1[vals1 < 0].sum())
    vals1 = np.clip(vals1, 0.0, None)
    root1 = (vecs1 * np.sqrt(vals1)) @ vecs1.T
    inner = root1 @ sigma2 @ root1
    vals, _ = np.linalg.eigh((inner + inner.T) / 2.0)
    clamped += float(-vals[vals < 0].sum())
    vals = np.clip(vals, 0.0, None)
    return float(np.sqrt(vals).sum()), clamped


def frechet_distance(a, b, embedder: Optional[Embedder] = None) -> float:
    """Frechet distance between Gaussian fits of two point clouds.

    ``|mu1 - mu2|^2 + tr(S1 + S2 - 2 (S1 S2)^{1/2})`` with covariances
    normalized by 1/(n-1). Nonnegative, symmetric, zero for identical
    empirical moments.
    """
    xa = _coords(a, embedder)
    xb = _coords(b, embedder)
    if xa.shape[0] < 2 or xb.shape[0] < 2:
        raise ValueError("frechet_distance requires at least 2 samples per side")
    mu1, mu2 = xa.mean(axis=0), xb.mean(axis=0)
    s1 = np.cov(xa, rowvar=False, ddof=1).reshape(xa.shape[1], xa.shape[1])
    s2 = np.cov(xb, rowvar=False, ddof=1).reshape(xb.shape[1], xb.shape[1])
    sqrt_trace, clamped = _psd_sqrt_trace(s1, s2)
    scale = max(float(np.trace(s1) + np.trace(s2)), 1.0)
    if clamped > 1e-9 * scale:
        logger.warning("frechet_distance clamped %.3e of negative eigenvalue mass", clamped)
    diff = mu1 - mu2
    value = float(diff @ diff) + float(np.trace(s1) + np.trace(s2)) - 2.0 * sqrt_trace
    return max(value, 0.0)


def intrinsic_dimension(variations, variance_threshold: float = 0.8) -> int:
    """Smallest number of singular directions explaining the given variance.

    Rows are centered by their mean; the estimate is the least n with
    ``sum of the top-n squared singular values / total >= threshold``.
    Returns 0 when all rows are identical.
    """
    if not 0 < variance_threshold <= 1:
        raise ValueError("variance_threshold must be in (0, 1]")
    mat = np.atleast_2d(np.asarray(variations, dtype=np.float64))
    if mat.shape[0] < 2:
        raise ValueError("need at least 2 variation embeddings")
    centered = mat - mat.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    power = sv**2
    total = power.sum()
    if total <= 0:
        return 0
    ratio = np.cumsum(power) / total
    return int(np.searchsorted(ratio, variance_threshold - 1e-12) + 1)


def histogram_std(hist: VoteHistogram) -> Tuple[float, float]:
    """Population standard deviation of the raw and released count vectors."""
    return float(np.std(hist.raw)), float(np.std(hist.released))

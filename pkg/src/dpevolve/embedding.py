"""Embedding functions and the lookahead embedding.

Distances between private and generated samples are taken in embedding
space. Two embedders are provided: the identity, and a seeded random
projection with orthonormal rows (so it never expands norms). The lookahead
embedding replaces a candidate's embedding with the mean embedding of k of
its variations, predicting where the candidate's offspring will land; the
variations are used only for that mean and are then discarded.
"""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from .core import Population, Sample
from .rng import RngStream

__all__ = ["Embedder", "lookahead_embedding"]


class Embedder:
    """Deterministic map from sample space (dim m) to embedding space (dim e)."""

    def __init__(self, input_dim: int, output_dim: Optional[int] = None, seed: Optional[int] = None):
        """Identity when ``output_dim`` is None; else a seeded random projection.

        The projection matrix has orthonormal rows, is fixed per (dims, seed)
        and requires ``output_dim <= input_dim``.
        """
        self.input_dim = int(input_dim)
        if output_dim is None:
            self.output_dim = self.input_dim
            self._matrix = None
        else:
            if output_dim > input_dim or output_dim < 1:
                raise ValueError("projection requires 1 <= output_dim <= input_dim")
            if seed is None:
                raise ValueError("random projection requires a seed")
            self.output_dim = int(output_dim)
            gen = RngStream(seed, "embedder").generator()
            gaussian = gen.standard_normal((self.input_dim, self.output_dim))
            q, _ = np.linalg.qr(gaussian)
            matrix = q.T  # (e, m), orthonormal rows
            matrix.flags.writeable = False
            self._matrix = matrix

    @property
    def is_identity(self) -> bool:
        return self._matrix is None

    def embed(self, sample: Union[Sample, np.ndarray]) -> np.ndarray:
        """Embed a single sample; pure and stateless."""
        coords = sample.coords if isinstance(sample, Sample) else np.asarray(sample, dtype=np.float64)
        if coords.shape != (self.input_dim,):
            raise ValueError(f"expected shape ({self.input_dim},), got {coords.shape}")
        if self._matrix is None:
            return coords.copy()
        return self._matrix @ coords

    def embed_many(self, coords: np.ndarray) -> np.ndarray:
        """Embed rows of an (n, m) array into an (n, e) array."""
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != self.input_dim:
            raise ValueError(f"expected shape (n, {self.input_dim}), got {coords.shape}")
        if self._matrix is None:
            return coords.copy()
        return coords @ self._matrix.T


def lookahead_embedding(
    z: Sample,
    k: int,
    api,
    degree: float,
    rng: RngStream,
    embedder: Embedder,
) -> np.ndarray:
    """Mean embedding of ``k`` variations of ``z`` at the given degree.

    ``k = 0`` returns ``embedder.embed(z)`` exactly. The variations share the
    degree of the upcoming offspring step but draw from their own stream, so
    enabling lookahead never perturbs offspring randomness.
    """
    if k < 0:
        raise ValueError("lookahead degree must be >= 0")
    if k == 0:
        return embedder.embed(z)
    source = Population(z.coords[None, :], conditions=None if z.condition is None else (z.condition,))
    variations = api.variation_api(source, degree, rng, count_per_sample=k)
    return embedder.embed_many(variations.coords).mean(axis=0)

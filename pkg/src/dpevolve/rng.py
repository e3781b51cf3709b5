"""Deterministic RNG stream derivation.

Every random draw in this package flows from a single root seed through a
tree of named substreams. A substream is identified by the path of labels
and indices leading to it, never by call order, so results are identical
regardless of how work is scheduled across workers.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["RngStream"]


def _encode(part) -> int:
    """Map a path component to a nonnegative int for SeedSequence entropy."""
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError(f"stream path ints must be nonnegative, got {part}")
        return int(part)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"stream path components must be int or str, got {type(part)!r}")


class RngStream:
    """A node in a deterministic tree of random streams.

    ``RngStream(seed).child("offspring", t, i).generator()`` always yields
    the same ``numpy.random.Generator`` state for the same (seed, path),
    independent of when or where it is created.
    """

    __slots__ = ("_key",)

    def __init__(self, seed: int, *path):
        self._key = (_encode(seed),) + tuple(_encode(p) for p in path)

    def child(self, *path) -> "RngStream":
        out = object.__new__(RngStream)
        out._key = self._key + tuple(_encode(p) for p in path)
        return out

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self._key)))

    def wire_seed(self) -> int:
        """A uint64 view of this stream, for seeding remote backends."""
        state = np.random.SeedSequence(self._key).generate_state(2, dtype=np.uint32)
        return int(state[0]) | (int(state[1]) << 32)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"RngStream{self._key}"

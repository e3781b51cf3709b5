"""Shared domain types and dataset I/O.

Samples are points in a bounded real vector space. Datasets and populations
are ordered multisets of samples backed by float64 arrays; duplicates are
meaningful and every algorithm in this package treats them as such. All
types are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "DataFormatError",
    "Sample",
    "Dataset",
    "Population",
    "VoteHistogram",
    "BallWorld",
    "load_dataset",
    "save_dataset",
]

_BINARY_MAGIC = b"PEDS"


class DataFormatError(ValueError):
    """Raised when a dataset file cannot be parsed or written."""


def _frozen_array(values, dtype=np.float64, ndim: Optional[int] = None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"expected {ndim}-d array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Sample:
    """One point: coordinates plus optional class label and condition tag.

    The condition tag is opaque to everything except generation backends,
    which pass it through to the underlying API.
    """

    coords: np.ndarray
    label: Optional[str] = None
    condition: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen_array(self.coords, ndim=1))

    @property
    def dimension(self) -> int:
        return self.coords.shape[0]


def _check_labels(coords: np.ndarray, labels) -> Optional[tuple]:
    if labels is None:
        return None
    labels = tuple(str(v) for v in labels)
    if len(labels) != coords.shape[0]:
        raise ValueError(
            f"got {len(labels)} labels for {coords.shape[0]} samples"
        )
    return labels


@dataclass(frozen=True)
class Dataset:
    """Ordered multiset of samples, optionally labelled.

    ``coords`` has shape ``(n, m)``. ``labels`` is either None (unconditional
    data) or one label string per row. Equality of two datasets is
    order-sensitive, matching the serialization formats.
    """

    coords: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen_array(self.coords, ndim=2))
        object.__setattr__(self, "labels", _check_labels(self.coords, self.labels))

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield Sample(self.coords[i], None if self.labels is None else self.labels[i])

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    @property
    def classes(self) -> frozenset:
        """Distinct labels present; empty for unconditional data."""
        if self.labels is None:
            return frozenset()
        return frozenset(self.labels)

    def restrict_to_class(self, label: str) -> "Dataset":
        if self.labels is None:
            raise ValueError("dataset has no labels")
        mask = np.array([lab == label for lab in self.labels])
        return Dataset(self.coords[mask])

    @staticmethod
    def from_samples(samples: Sequence[Sample]) -> "Dataset":
        if not samples:
            raise ValueError("no samples")
        coords = np.stack([s.coords for s in samples])
        labels = None
        if any(s.label is not None for s in samples):
            labels = tuple(s.label if s.label is not None else "" for s in samples)
        return Dataset(coords, labels)


@dataclass(frozen=True)
class Population:
    """Generated samples at a given iteration of the evolution loop.

    ``conditions`` carries one backend tag per row (or None when no
    conditioning is in use); it is inherited through variation calls.
    ``labels`` holds class labels on the output of conditional runs.
    """

    coords: np.ndarray
    generation: int = 0
    conditions: Optional[tuple] = None
    labels: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "coords", _frozen_array(self.coords, ndim=2))
        if self.generation < 0:
            raise ValueError("generation must be >= 0")
        if self.conditions is not None:
            conds = tuple(self.conditions)
            if len(conds) != self.coords.shape[0]:
                raise ValueError(
                    f"got {len(conds)} condition tags for {self.coords.shape[0]} samples"
                )
            object.__setattr__(self, "conditions", conds)
        object.__setattr__(self, "labels", _check_labels(self.coords, self.labels))

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            cond = None if self.conditions is None else self.conditions[i]
            lab = None if self.labels is None else self.labels[i]
            yield Sample(self.coords[i], label=lab, condition=cond)

    @property
    def dimension(self) -> int:
        return self.coords.shape[1]

    def condition_of(self, index: int):
        return None if self.conditions is None else self.conditions[index]

    def to_dataset(self) -> Dataset:
        return Dataset(self.coords, self.labels)


@dataclass(frozen=True)
class VoteHistogram:
    """Per-population-member vote counts before and after privatization.

    ``raw`` holds exact integer counts (stored as floats), ``noisy`` the
    counts after Gaussian noise, and ``released`` the thresholded values
    ``max(noisy - H, 0)`` which are the only privately publishable vector.
    """

    raw: np.ndarray
    noisy: np.ndarray
    released: np.ndarray

    def __post_init__(self):
        raw = _frozen_array(self.raw, ndim=1)
        noisy = _frozen_array(self.noisy, ndim=1)
        released = _frozen_array(self.released, ndim=1)
        if not (len(raw) == len(noisy) == len(released)):
            raise ValueError("histogram vectors must share one length")
        if np.any(raw < 0) or np.any(raw != np.round(raw)):
            raise ValueError("raw counts must be nonnegative integers")
        if np.any(released < 0):
            raise ValueError("released counts must be nonnegative")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "noisy", noisy)
        object.__setattr__(self, "released", released)

    @property
    def population_size(self) -> int:
        return self.raw.shape[0]

    @property
    def total_votes(self) -> int:
        return int(round(float(self.raw.sum())))


@dataclass(frozen=True)
class BallWorld:
    """An L2 ball of diameter ``diameter`` around ``center``.

    All data handled by the simulated backend lives inside this ball; the
    clipping projection maps arbitrary points back onto it.
    """

    center: np.ndarray
    diameter: float

    def __post_init__(self):
        object.__setattr__(self, "center", _frozen_array(self.center, ndim=1))
        if self.diameter <= 0:
            raise ValueError("diameter must be > 0")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    def contains(self, points: np.ndarray, atol: float = 1e-9) -> bool:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        dist = np.linalg.norm(pts - self.center, axis=1)
        return bool(np.all(dist <= self.radius + atol))

    def project(self, points: np.ndarray) -> np.ndarray:
        """Project points onto the ball (identity for interior points)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        offset = pts - self.center
        dist = np.linalg.norm(offset, axis=1)
        scale = np.ones_like(dist)
        outside = dist > self.radius
        scale[outside] = self.radius / dist[outside]
        return self.center + offset * scale[:, None]


# ---------------------------------------------------------------------------
# Dataset I/O
#
# CSV: one row per sample, comma-separated decimal coordinates, optional
# trailing label token (detected as a non-numeric last column). Floats are
# written with repr(), which round-trips exactly under Python's parser.
#
# Binary: magic "PEDS", u32 sample count, u32 dimension, u8 has-label flag,
# row-major little-endian f64 coordinates, then u32-length-prefixed UTF-8
# labels. Bit-exact for every finite float.
# ---------------------------------------------------------------------------


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _load_csv(path: Path) -> Dataset:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rows.append((lineno, line.split(",")))
    if not rows:
        raise DataFormatError(f"{path}: no samples")

    has_label = not _is_float(rows[0][1][-1].strip())
    width = len(rows[0][1])
    coords = np.empty((len(rows), width - (1 if has_label else 0)), dtype=np.float64)
    labels = [] if has_label else None
    for i, (lineno, tokens) in enumerate(rows):
        if len(tokens) != width:
            raise DataFormatError(
                f"{path}: row {lineno}: expected {width} columns, got {len(tokens)}"
            )
        value_tokens = tokens[:-1] if has_label else tokens
        try:
            coords[i] = [float(tok) for tok in value_tokens]
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {lineno}: {exc}") from exc
        if has_label:
            labels.append(tokens[-1].strip())
    return Dataset(coords, tuple(labels) if has_label else None)


def _save_csv(dataset: Dataset, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(len(dataset)):
            tokens = [repr(float(v)) for v in dataset.coords[i]]
            if dataset.labels is not None:
                tokens.append(dataset.labels[i])
            fh.write(",".join(tokens) + "\n")


def _load_binary(path: Path) -> Dataset:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 13 or blob[:4] != _BINARY_MAGIC:
        raise DataFormatError(f"{path}: not a binary dataset (bad magic)")
    count, dim, has_label = struct.unpack_from("<IIB", blob, 4)
    if count == 0:
        raise DataFormatError(f"{path}: no samples")
    offset = 13
    need = count * dim * 8
    if len(blob) < offset + need:
        raise DataFormatError(f"{path}: truncated coordinate block")
    coords = np.frombuffer(blob, dtype="<f8", count=count * dim, offset=offset)
    coords = coords.reshape(count, dim).astype(np.float64)
    offset += need
    labels = None
    if has_label:
        labels = []
        for _ in range(count):
            if len(blob) < offset + 4:
                raise DataFormatError(f"{path}: truncated label block")
            (length,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            labels.append(blob[offset : offset + length].decode("utf-8"))
            offset += length
        labels = tuple(labels)
    return Dataset(coords, labels)


def _save_binary(dataset: Dataset, path: Path) -> None:
    has_label = dataset.labels is not None
    with open(path, "wb") as fh:
        fh.write(_BINARY_MAGIC)
        fh.write(struct.pack("<IIB", len(dataset), dataset.dimension, int(has_label)))
        fh.write(np.ascontiguousarray(dataset.coords, dtype="<f8").tobytes())
        if has_label:
            for label in dataset.labels:
                encoded = label.encode("utf-8")
                fh.write(struct.pack("<I", len(encoded)))
                fh.write(encoded)


def load_dataset(path, format: str = "csv") -> Dataset:
    """Load a dataset from ``path`` in the given format ("csv" or "binary")."""
    path = Path(path)
    if format == "csv":
        return _load_csv(path)
    if format == "binary":
        return _load_binary(path)
    raise ValueError(f"unknown dataset format {format!r}")


def save_dataset(dataset: Dataset, path, format: str = "csv") -> None:
    """Write ``dataset`` to ``path``; binary round-trips bit-exactly."""
    path = Path(path)
    if format == "csv":
        _save_csv(dataset, path)
    elif format == "binary":
        _save_binary(dataset, path)
    else:
        raise ValueError(f"unknown dataset format {format!r}")

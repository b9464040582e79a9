"""Descriptor and frame types, l2 distance and exhaustive nearest-neighbor search."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .errors import DataError, DimensionMismatchError, ConfigurationError


@dataclass(frozen=True, order=True)
class FrameId:
    """Identity of one observation.

    ``robot`` is the robot that captured the frame, ``local_index`` its position
    in that robot's sub-sequence and ``global_index`` its position in the full
    capture sequence.
    """

    robot: int
    local_index: int
    global_index: int


def as_descriptor(values, dim: int | None = None) -> np.ndarray:
    """Return ``values`` as a finite 1-D float64 array, optionally checking its length."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise DataError(f"descriptor must be a non-empty 1-D vector, got shape {v.shape}")
    if dim is not None and v.size != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise DataError("descriptor contains non-finite values")
    return v


def as_descriptor_matrix(values, dim: int | None = None) -> np.ndarray:
    """Stack descriptors into a finite (N, d) float64 array."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim == 1 and m.size == 0:
        m = m.reshape(0, dim or 0)
    if m.ndim != 2:
        raise DataError(f"expected a 2-D descriptor matrix, got shape {m.shape}")
    if dim is not None and m.shape[1] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise DataError("descriptor matrix contains non-finite values")
    return m


def _row_distances(rows: np.ndarray, v: np.ndarray) -> np.ndarray:
    # Shared by every distance path so stored nn distances recompute bit-for-bit.
    diff = rows - v
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def l2_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(_row_distances(a.reshape(1, -1), b.reshape(-1))[0])


@dataclass(frozen=True)
class TemporalExclusion:
    """Excludes frames of the query's robot within ``window`` local frames of it.

    Usable as a plain predicate over FrameId; nearest_neighbor also recognises it
    and evaluates it vectorised over the store.
    """

    query: FrameId
    window: int

    def __call__(self, fid: FrameId) -> bool:
        return fid.robot == self.query.robot and abs(fid.local_index - self.query.local_index) <= self.window

    def mask(self, robots: np.ndarray, local_indices: np.ndarray) -> np.ndarray:
        return (robots == self.query.robot) & (np.abs(local_indices - self.query.local_index) <= self.window)


class DescriptorStore:
    """Insertion-ordered collection of (FrameId, descriptor) pairs.

    Single writer. Descriptors are held as float64 rows of a growable array.
    """

    def __init__(self, dim: int, capacity: int = 64):
        if dim < 1:
            raise ConfigurationError("dimension must be >= 1")
        self.dim = dim
        self._data = np.empty((max(capacity, 1), dim), dtype=np.float64)
        self._robot = np.empty(max(capacity, 1), dtype=np.int64)
        self._local = np.empty(max(capacity, 1), dtype=np.int64)
        self._global = np.empty(max(capacity, 1), dtype=np.int64)
        self._ids: list[FrameId] = []
        self._seen: set[FrameId] = set()

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, fid: FrameId) -> bool:
        return fid in self._seen

    def __iter__(self) -> Iterator[tuple[FrameId, np.ndarray]]:
        for i, fid in enumerate(self._ids):
            yield fid, self._data[i]

    @property
    def frame_ids(self) -> list[FrameId]:
        return list(self._ids)

    @property
    def descriptors(self) -> np.ndarray:
        return self._data[: len(self._ids)]

    @property
    def global_indices(self) -> np.ndarray:
        return self._global[: len(self._ids)]

    def add(self, fid: FrameId, descriptor) -> None:
        if fid in self._seen:
            raise ConfigurationError(f"duplicate frame id {fid}")
        v = as_descriptor(descriptor, self.dim)
        n = len(self._ids)
        if n == self._data.shape[0]:
            grow = 2 * n
            self._data = np.resize(self._data, (grow, self.dim))
            self._robot = np.resize(self._robot, grow)
            self._local = np.resize(self._local, grow)
            self._global = np.resize(self._global, grow)
        self._data[n] = v
        self._robot[n] = fid.robot
        self._local[n] = fid.local_index
        self._global[n] = fid.global_index
        self._ids.append(fid)
        self._seen.add(fid)

    def excluded_mask(self, exclusion: Optional[Callable[[FrameId], bool]]) -> np.ndarray:
        n = len(self._ids)
        if exclusion is None:
            return np.zeros(n, dtype=bool)
        if isinstance(exclusion, TemporalExclusion):
            return exclusion.mask(self._robot[:n], self._local[:n])
        return np.fromiter((bool(exclusion(f)) for f in self._ids), dtype=bool, count=n)


def nearest_neighbor(
    query,
    store: DescriptorStore,
    exclusion: Optional[Callable[[FrameId], bool]] = None,
) -> Optional[tuple[FrameId, float]]:
    """Closest non-excluded entry of ``store`` to ``query``.

    Returns None if the store is empty or every entry is excluded. Exact ties go
    to the entry with the smallest global index.
    """
    q = as_descriptor(query)
    if q.size != store.dim:
        raise DimensionMismatchError(f"query dimension {q.size} != store dimension {store.dim}")
    if len(store) == 0:
        return None
    dist = _row_distances(store.descriptors, q)
    dist[store.excluded_mask(exclusion)] = np.inf
    best = dist.min()
    if not np.isfinite(best):
        return None
    candidates = np.flatnonzero(dist == best)
    i = candidates[np.argmin(store.global_indices[candidates])]
    return store._ids[i], float(dist[i])

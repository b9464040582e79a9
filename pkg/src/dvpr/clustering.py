"""k-means partition of descriptor space (k-means++ seeding, Lloyd iterations)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .descriptors import _row_distances, as_descriptor, as_descriptor_matrix
from .errors import DimensionMismatchError, EmptyInputError, InfeasibleKError

DEFAULT_MAX_ITERS = 100
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class TrainingMeta:
    iterations_run: int
    final_sse: float
    seed: int
    converged: bool = True


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray  # (k, d) float64
    training_meta: Optional[TrainingMeta] = None

    def __post_init__(self):
        c = as_descriptor_matrix(self.centroids)
        if c.shape[0] < 1:
            raise InfeasibleKError("a cluster model needs at least one centroid")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


def _distance_table(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (N, k); column-by-column so every entry uses the shared row-distance kernel
    out = np.empty((points.shape[0], centroids.shape[0]))
    for j in range(centroids.shape[0]):
        out[:, j] = _row_distances(points, centroids[j])
    return out


def _assign(points: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    table = _distance_table(points, centroids)
    labels = np.argmin(table, axis=1)  # first minimum: smallest centroid index wins ties
    return labels, table[np.arange(points.shape[0]), labels]


def assign_cluster(model: ClusterModel, v) -> int:
    v = as_descriptor(v)
    if v.size != model.dim:
        raise DimensionMismatchError(f"descriptor dimension {v.size} != model dimension {model.dim}")
    return int(np.argmin(_row_distances(model.centroids, v)))


def assign_clusters(model: ClusterModel, points) -> np.ndarray:
    """Vectorised assign_cluster over the rows of ``points``."""
    pts = as_descriptor_matrix(points)
    if pts.shape[1] != model.dim:
        raise DimensionMismatchError(f"descriptor dimension {pts.shape[1]} != model dimension {model.dim}")
    if pts.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return _assign(pts, model.centroids)[0]


def sse(model: ClusterModel, points) -> float:
    pts = as_descriptor_matrix(points)
    if pts.shape[1] != model.dim:
        raise DimensionMismatchError(f"descriptor dimension {pts.shape[1]} != model dimension {model.dim}")
    if pts.shape[0] == 0:
        return 0.0
    _, dmin = _assign(pts, model.centroids)
    return float(np.sum(dmin**2))


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _row_distances(points, points[chosen[0]]) ** 2
    for _ in range(1, k):
        cum = np.cumsum(d2)
        r = rng.random() * cum[-1]
        # first index with cum > r always has positive weight
        idx = int(np.searchsorted(cum, r, side="right"))
        if idx >= n:  # r rounded up to the total
            idx = int(np.flatnonzero(d2 > 0)[-1])
        chosen.append(idx)
        d2 = np.minimum(d2, _row_distances(points, points[idx]) ** 2)
    return points[chosen].copy()


def _repair_empty(points, centroids, labels, dmin, k):
    """Move every memberless centroid onto the point farthest from its nearest centroid."""
    for _ in range(k * points.shape[0] + 1):
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return centroids, labels, dmin
        far = int(np.argmax(dmin))
        centroids[empty[0]] = points[far]
        labels, dmin = _assign(points, centroids)
    raise RuntimeError("empty-cluster repair did not terminate")


def train_kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    trace: Optional[Callable[[int, float], None]] = None,
) -> ClusterModel:
    """Lloyd's k-means with k-means++ seeding.

    Stops once no centroid moves by more than ``tol`` or after ``max_iters``
    update steps. ``trace`` is called with (iteration, sse) after every
    assignment step, before the centroids are updated.

    Raises EmptyInputError for no points and InfeasibleKError when ``k``
    exceeds the number of distinct points.
    """
    pts = as_descriptor_matrix(points)
    if pts.shape[0] == 0:
        raise EmptyInputError("cannot cluster an empty point set")
    if k < 1:
        raise InfeasibleKError(f"k must be >= 1, got {k}")
    distinct = np.unique(pts, axis=0).shape[0]
    if k > distinct:
        raise InfeasibleKError(f"k={k} exceeds the {distinct} distinct points")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")

    rng = np.random.default_rng(seed)
    centroids = kmeans_plusplus(pts, k, rng)
    converged = False
    iterations = 0
    for it in range(max_iters):
        labels, dmin = _assign(pts, centroids)
        centroids, labels, dmin = _repair_empty(pts, centroids, labels, dmin, k)
        if trace is not None:
            trace(it, float(np.sum(dmin**2)))
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, pts)
        new = sums / np.bincount(labels, minlength=k)[:, None]
        shift = float(np.max(_row_distances(new - centroids, np.zeros(pts.shape[1]))))
        centroids = new
        iterations = it + 1
        if shift <= tol:
            converged = True
            break

    labels, dmin = _assign(pts, centroids)
    if np.bincount(labels, minlength=k).min() == 0:
        centroids, labels, dmin = _repair_empty(pts, centroids, labels, dmin, k)
        converged = False
    meta = TrainingMeta(iterations, float(np.sum(dmin**2)), int(seed), converged)
    return ClusterModel(centroids, meta)


def train_kmeans_best(points, k: int, seeds: Iterable[int], **kwargs) -> ClusterModel:
    """Train once per seed and keep the lowest-SSE model (earliest seed on ties)."""
    best = None
    for s in seeds:
        model = train_kmeans(points, k, seed=s, **kwargs)
        if best is None or model.training_meta.final_sse < best.training_meta.final_sse:
            best = model
    if best is None:
        raise ValueError("no seeds given")
    return best

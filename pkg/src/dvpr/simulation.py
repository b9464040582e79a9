"""Sequential simulation of cluster-routed place recognition across a robot swarm.

Frames are processed on one interleaved timeline (ascending global index). In
decentralized mode every query goes to the robot owning its descriptor's
cluster, which answers from its own store and then stores the query. The
centralized reference answers every query from one global store.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .clustering import ClusterModel, assign_clusters
from .descriptors import DescriptorStore, _row_distances, FrameId, TemporalExclusion, as_descriptor_matrix, nearest_neighbor
from .errors import ConfigurationError, InfeasibleSplitError
from .routing import (
    FLOAT32_BYTES,
    BandwidthLedger,
    OwnershipMap,
    broadcast_bytes_baseline,
    owner_array,
    query_bytes,
)

CENTRALIZED_ROBOT = -1
DEFAULT_WINDOW = 50
DEFAULT_GT_RADIUS_M = 10.0


class Mode(str, enum.Enum):
    DECENTRALIZED = "decentralized"
    CENTRALIZED = "centralized"


@dataclass(frozen=True)
class SwarmConfig:
    n: int
    temporal_exclusion_window: int = DEFAULT_WINDOW
    mode: Mode = Mode.DECENTRALIZED
    seed: int = 0
    gt_radius_m: float = DEFAULT_GT_RADIUS_M

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("robot count must be >= 1")
        if self.temporal_exclusion_window < 0:
            raise ConfigurationError("temporal exclusion window must be >= 0")
        if not self.gt_radius_m > 0:
            raise ConfigurationError("ground-truth radius must be > 0")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True)
class QueryRecord:
    query: FrameId
    routed_robot: int
    match: Optional[FrameId]
    nn_distance: Optional[float]
    has_gt_match: bool
    is_true_positive: bool
    bytes_sent: int


@dataclass(frozen=True)
class Dataset:
    """Deployment frames: descriptors, their FrameIds and camera positions, aligned by row."""

    descriptors: np.ndarray
    frames: tuple[FrameId, ...]
    positions: np.ndarray

    def __post_init__(self):
        d = as_descriptor_matrix(self.descriptors)
        p = np.asarray(self.positions, dtype=np.float64)
        frames = tuple(self.frames)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ConfigurationError(f"positions must be (N, 3), got {p.shape}")
        if not (d.shape[0] == len(frames) == p.shape[0]):
            raise ConfigurationError(
                f"misaligned dataset: {d.shape[0]} descriptors, {len(frames)} frames, {p.shape[0]} positions"
            )
        if len({f.global_index for f in frames}) != len(frames):
            raise ConfigurationError("duplicate global index")
        if len({(f.robot, f.local_index) for f in frames}) != len(frames):
            raise ConfigurationError("duplicate (robot, local_index)")
        object.__setattr__(self, "descriptors", d)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def dim(self) -> int:
        return self.descriptors.shape[1]

    @cached_property
    def row_of(self) -> dict[FrameId, int]:
        return {f: r for r, f in enumerate(self.frames)}

    @classmethod
    def from_sequence(cls, descriptors, positions, n: int) -> "Dataset":
        """Split a single capture sequence into ``n`` robot sub-sequences."""
        descriptors = as_descriptor_matrix(descriptors)
        return cls(descriptors, tuple(split_trajectory(descriptors.shape[0], n)), positions)


def split_trajectory(frame_count: int, n: int) -> list[FrameId]:
    """FrameIds for ``frame_count`` frames split into ``n`` contiguous blocks.

    Block sizes are floor(N/n), the first N mod n blocks taking one extra frame.
    """
    if n < 1:
        raise InfeasibleSplitError("robot count must be >= 1")
    if frame_count < n:
        raise InfeasibleSplitError(f"cannot split {frame_count} frames among {n} robots")
    base, extra = divmod(frame_count, n)
    out = []
    g = 0
    for robot in range(n):
        for local in range(base + (1 if robot < extra else 0)):
            out.append(FrameId(robot, local, g))
            g += 1
    return out


def ground_truth_match(query_position, candidate_position, radius: float) -> bool:
    if not radius > 0:
        raise ConfigurationError("radius must be > 0")
    q = np.asarray(query_position, dtype=np.float64).reshape(1, 3)
    return bool(_row_distances(q, np.asarray(candidate_position, dtype=np.float64))[0] <= radius)


@dataclass
class SimulationResult:
    records: list[QueryRecord]
    ledger: BandwidthLedger
    stores: list[DescriptorStore]


def run_simulation(
    dataset: Dataset,
    model: Optional[ClusterModel],
    ownership: Optional[OwnershipMap],
    cfg: SwarmConfig,
) -> SimulationResult:
    """Replay ``dataset`` through the protocol and return one record per frame.

    ``model`` and ``ownership`` are only consulted in decentralized mode. A
    record's has_gt_match looks at every earlier frame the temporal rule allows,
    whichever robot stores it, so both modes share one recall denominator.
    """
    decentralized = cfg.mode is Mode.DECENTRALIZED
    dim = dataset.dim
    if any(f.robot < 0 or f.robot >= cfg.n for f in dataset.frames):
        raise ConfigurationError(f"frame robot index outside [0, {cfg.n})")

    ledger = BandwidthLedger(cfg.n)
    if decentralized:
        if model is None or ownership is None:
            raise ConfigurationError("decentralized mode needs a cluster model and an ownership map")
        if ownership.k != model.k:
            raise ConfigurationError(f"ownership covers {ownership.k} clusters but the model has {model.k}")
        if ownership.n != cfg.n:
            raise ConfigurationError(f"ownership is for {ownership.n} robots, config has {cfg.n}")
        if model.dim != dim:
            raise ConfigurationError(f"model dimension {model.dim} != descriptor dimension {dim}")
        robots = owner_array(ownership)[assign_clusters(model, dataset.descriptors)]
        stores = [DescriptorStore(dim) for _ in range(cfg.n)]
        nbytes = query_bytes(dim, FLOAT32_BYTES)
    else:
        robots = np.full(len(dataset), CENTRALIZED_ROBOT)
        stores = [DescriptorStore(dim)]
        nbytes = broadcast_bytes_baseline(dim, FLOAT32_BYTES, cfg.n)

    order = sorted(range(len(dataset)), key=lambda i: dataset.frames[i].global_index)
    seen_pos = np.empty((len(dataset), 3))
    seen_robot = np.empty(len(dataset), dtype=np.int64)
    seen_local = np.empty(len(dataset), dtype=np.int64)
    records = []
    for step, i in enumerate(order):
        fid = dataset.frames[i]
        v = dataset.descriptors[i]
        pos = dataset.positions[i]
        exclusion = TemporalExclusion(fid, cfg.temporal_exclusion_window)

        robot = int(robots[i])
        store = stores[robot] if decentralized else stores[0]
        hit = nearest_neighbor(v, store, exclusion)
        store.add(fid, v)

        allowed = ~exclusion.mask(seen_robot[:step], seen_local[:step])
        has_gt = bool(np.any(_row_distances(seen_pos[:step][allowed], pos) <= cfg.gt_radius_m))
        seen_pos[step] = pos
        seen_robot[step] = fid.robot
        seen_local[step] = fid.local_index

        match, dist, tp = None, None, False
        if hit is not None:
            match, dist = hit
            tp = ground_truth_match(pos, dataset.positions[dataset.row_of[match]], cfg.gt_radius_m)

        if decentralized:
            ledger.record_unicast(robot, nbytes)
        else:
            ledger.record_broadcast(nbytes // cfg.n)
        records.append(QueryRecord(fid, robot, match, dist, has_gt, tp, nbytes))
    return SimulationResult(records, ledger, stores)


def union_of_stores(stores: Sequence[DescriptorStore]) -> dict[FrameId, np.ndarray]:
    out = {}
    for s in stores:
        for fid, v in s:
            out[fid] = v
    return out

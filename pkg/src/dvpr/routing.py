"""Cluster-to-robot ownership, query routing and bandwidth accounting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterModel, assign_cluster
from .errors import ConfigurationError, UndefinedMetricError

FLOAT32_BYTES = 4


@dataclass(frozen=True)
class OwnershipMap:
    owner_of_cluster: tuple[int, ...]
    n: int

    def __post_init__(self):
        owners = tuple(int(o) for o in self.owner_of_cluster)
        if self.n < 1:
            raise ConfigurationError("robot count must be >= 1")
        if not owners:
            raise ConfigurationError("ownership map needs at least one cluster")
        if any(o < 0 or o >= self.n for o in owners):
            raise ConfigurationError(f"owners must lie in [0, {self.n})")
        object.__setattr__(self, "owner_of_cluster", owners)

    @property
    def k(self) -> int:
        return len(self.owner_of_cluster)

    @classmethod
    def modular(cls, k: int, n: int) -> "OwnershipMap":
        """Cluster c is owned by robot c mod n; the identity when k == n."""
        if k < 1:
            raise ConfigurationError("cluster count must be >= 1")
        return cls(tuple(c % n for c in range(k)), n)

    def owner(self, cluster: int) -> int:
        return self.owner_of_cluster[cluster]

    def clusters_of(self, robot: int) -> list[int]:
        return [c for c, o in enumerate(self.owner_of_cluster) if o == robot]


def route(model: ClusterModel, ownership: OwnershipMap, v) -> int:
    if ownership.k != model.k:
        raise ConfigurationError(f"ownership covers {ownership.k} clusters but the model has {model.k}")
    return ownership.owner_of_cluster[assign_cluster(model, v)]


def query_bytes(d: int, precision_bytes: int = FLOAT32_BYTES) -> int:
    """Payload of one descriptor query, protocol overhead excluded."""
    if d < 1 or precision_bytes < 1:
        raise ConfigurationError("dimension and precision must be >= 1")
    return d * precision_bytes


def broadcast_bytes_baseline(d: int, precision_bytes: int, n: int) -> int:
    """Payload of sending the same query to all ``n`` robots."""
    if n < 1:
        raise ConfigurationError("robot count must be >= 1")
    return n * query_bytes(d, precision_bytes)


@dataclass
class BandwidthLedger:
    """Per-robot received query payloads. Owned by one simulation run."""

    n: int
    per_robot_bytes_received: list[int] = field(default_factory=list)
    per_robot_queries: list[int] = field(default_factory=list)
    total_queries: int = 0
    total_bytes: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError("robot count must be >= 1")
        if not self.per_robot_bytes_received:
            self.per_robot_bytes_received = [0] * self.n
        if not self.per_robot_queries:
            self.per_robot_queries = [0] * self.n

    def record_unicast(self, robot: int, nbytes: int) -> None:
        self.per_robot_bytes_received[robot] += nbytes
        self.per_robot_queries[robot] += 1
        self.total_queries += 1
        self.total_bytes += nbytes

    def record_broadcast(self, nbytes_per_robot: int) -> None:
        for r in range(self.n):
            self.per_robot_bytes_received[r] += nbytes_per_robot
            self.per_robot_queries[r] += 1
        self.total_queries += 1
        self.total_bytes += nbytes_per_robot * self.n

    @classmethod
    def from_counts(cls, counts, nbytes: int = 0) -> "BandwidthLedger":
        counts = [int(c) for c in counts]
        return cls(
            n=len(counts),
            per_robot_bytes_received=[c * nbytes for c in counts],
            per_robot_queries=counts,
            total_queries=sum(counts),
            total_bytes=sum(counts) * nbytes,
        )


def worst_balance_ratio(ledger: BandwidthLedger) -> float:
    """Busiest robot's query count over its perfectly balanced share.

    The share is the number of query deliveries divided by n. For unicast-only
    ledgers deliveries equal total_queries; a broadcast delivers to every robot,
    so an all-broadcast ledger scores 1.0.
    """
    delivered = sum(ledger.per_robot_queries)
    if ledger.total_queries < 1 or delivered < 1:
        raise UndefinedMetricError("worst balance ratio is undefined without queries")
    return max(ledger.per_robot_queries) * ledger.n / delivered


def owner_array(ownership: OwnershipMap) -> np.ndarray:
    return np.asarray(ownership.owner_of_cluster, dtype=np.int64)

"""Precision-recall over all distance thresholds, AUC, confusion matrices and robot-count sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .clustering import DEFAULT_MAX_ITERS, DEFAULT_TOL, train_kmeans
from .errors import ConfigurationError, UndefinedMetricError
from .routing import OwnershipMap, worst_balance_ratio
from .simulation import (
    DEFAULT_GT_RADIUS_M,
    DEFAULT_WINDOW,
    Dataset,
    Mode,
    QueryRecord,
    SimulationResult,
    SwarmConfig,
    run_simulation,
    split_trajectory,
)


@dataclass(frozen=True)
class PRCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    auc: float

    @property
    def points(self) -> list[tuple[float, float, float]]:
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist()))


def pr_auc(precision: np.ndarray, recall: np.ndarray) -> float:
    """Trapezoids over recall plus a leading rectangle from recall 0 to the first point."""
    if len(recall) == 0:
        return 0.0
    lead = recall[0] * precision[0]
    body = np.sum(np.diff(recall) * (precision[1:] + precision[:-1]) / 2.0)
    return float(lead + body)


def pr_curve(records: Sequence[QueryRecord]) -> PRCurve:
    """Sweep every observed nn distance as an acceptance threshold.

    A query is accepted at threshold t when it returned a match with distance
    <= t. Precision with nothing accepted counts as 1.
    """
    gt_total = sum(1 for r in records if r.has_gt_match)
    if gt_total == 0:
        raise UndefinedMetricError("no query has a ground-truth match; recall is undefined")
    matched = [r for r in records if r.match is not None]
    dist = np.array([r.nn_distance for r in matched], dtype=np.float64)
    tp = np.array([r.is_true_positive for r in matched], dtype=bool)

    thresholds = np.unique(dist)
    order = np.argsort(dist, kind="stable")
    cum_tp = np.concatenate([[0], np.cumsum(tp[order])])
    accepted = np.searchsorted(dist[order], thresholds, side="right")
    tp_at = cum_tp[accepted]
    # every threshold is an observed distance, so accepted >= 1 here
    precision = (tp_at / np.maximum(accepted, 1)).astype(np.float64)
    recall = (tp_at / gt_total).astype(np.float64)
    return PRCurve(thresholds, precision, recall, pr_auc(precision, recall))


def relative_auc(decentralized: PRCurve, centralized: PRCurve) -> float:
    if centralized.auc == 0:
        raise UndefinedMetricError("centralized AUC is zero")
    return decentralized.auc / centralized.auc


@dataclass(frozen=True)
class ConfusionMatrix:
    """Query x candidate matrices, both axes ordered by global index.

    ``distance`` holds the returned nn distance at the matched cell of each
    query and NaN elsewhere; ``match`` is that cell thresholded.
    """

    global_indices: np.ndarray
    distance: np.ndarray
    match: np.ndarray
    threshold: float


def confusion_matrix(records: Sequence[QueryRecord], threshold: float) -> ConfusionMatrix:
    if not np.isfinite(threshold):
        raise ConfigurationError("threshold must be finite")
    gidx = np.array(sorted(r.query.global_index for r in records), dtype=np.int64)
    pos = {g: i for i, g in enumerate(gidx.tolist())}
    n = len(gidx)
    distance = np.full((n, n), np.nan)
    for r in records:
        if r.match is not None and r.match.global_index in pos:
            distance[pos[r.query.global_index], pos[r.match.global_index]] = r.nn_distance
    with np.errstate(invalid="ignore"):
        match = distance <= threshold
    return ConfusionMatrix(gidx, distance, match, float(threshold))


@dataclass(frozen=True)
class SweepRow:
    n: int
    trial: int
    seed: int
    relative_auc: float
    worst_balance_ratio: float
    auc_decentralized: float
    auc_centralized: float


@dataclass(frozen=True)
class SweepMean:
    n: int
    trials: int
    relative_auc: float
    worst_balance_ratio: float


@dataclass(frozen=True)
class RunPair:
    """One decentralized run and its centralized reference on the same data."""

    n: int
    k: int
    seed: int
    decentralized: SimulationResult
    centralized: SimulationResult
    pr_decentralized: PRCurve
    pr_centralized: PRCurve

    @property
    def relative_auc(self) -> float:
        return relative_auc(self.pr_decentralized, self.pr_centralized)

    @property
    def worst_balance_ratio(self) -> float:
        return worst_balance_ratio(self.decentralized.ledger)


def run_pair(
    descriptors: np.ndarray,
    positions: np.ndarray,
    training: np.ndarray,
    n: int,
    seed: int,
    k: Optional[int] = None,
    window: int = DEFAULT_WINDOW,
    gt_radius_m: float = DEFAULT_GT_RADIUS_M,
    centralized: Optional[SimulationResult] = None,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> RunPair:
    """Split the sequence among ``n`` robots, train k-means and run both modes.

    ``centralized`` may pass in a reference run already computed for this
    split; it does not depend on the seed.
    """
    k = n if k is None else k
    dataset = Dataset(descriptors, tuple(split_trajectory(len(descriptors), n)), positions)
    model = train_kmeans(training, k, seed=seed, max_iters=max_iters, tol=tol)
    ownership = OwnershipMap.modular(k, n)
    dec = run_simulation(dataset, model, ownership, SwarmConfig(n, window, Mode.DECENTRALIZED, seed, gt_radius_m))
    if centralized is None:
        centralized = run_simulation(dataset, None, None, SwarmConfig(n, window, Mode.CENTRALIZED, seed, gt_radius_m))
    return RunPair(n, k, seed, dec, centralized, pr_curve(dec.records), pr_curve(centralized.records))


def sweep(
    descriptors: np.ndarray,
    positions: np.ndarray,
    training: np.ndarray,
    n_values: Iterable[int],
    trials: int,
    base_seed: int,
    window: int = DEFAULT_WINDOW,
    gt_radius_m: float = DEFAULT_GT_RADIUS_M,
) -> tuple[list[SweepRow], list[SweepMean]]:
    """Relative AUC and worst balance ratio for every (n, trial), plus per-n means.

    Trial t trains its clustering with seed base_seed + t and k = n.
    """
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rows, means = [], []
    for n in sorted(set(int(v) for v in n_values)):
        reference = None
        per_n = []
        for t in range(trials):
            pair = run_pair(descriptors, positions, training, n, base_seed + t,
                            window=window, gt_radius_m=gt_radius_m, centralized=reference)
            reference = pair.centralized
            per_n.append(SweepRow(n, t, base_seed + t, pair.relative_auc, pair.worst_balance_ratio,
                                  pair.pr_decentralized.auc, pair.pr_centralized.auc))
        rows.extend(per_n)
        means.append(SweepMean(
            n,
            trials,
            float(np.mean([r.relative_auc for r in per_n])),
            float(np.mean([r.worst_balance_ratio for r in per_n])),
        ))
    return rows, means

"""Synthetic descriptors and loop trajectories, including train/deploy distribution shift."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .descriptors import as_descriptor_matrix
from .errors import ConfigurationError
from .simulation import DEFAULT_GT_RADIUS_M


@dataclass(frozen=True)
class MixtureSpec:
    """Isotropic Gaussian mixture in R^d.

    Dimensions outside ``subspace_mask`` (when given) carry no variance: samples
    sit exactly on the component mean there.
    """

    means: np.ndarray  # (m, d)
    spreads: tuple[float, ...]
    weights: tuple[float, ...]
    subspace_mask: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        means = as_descriptor_matrix(self.means)
        m, d = means.shape
        spreads = tuple(float(s) for s in np.broadcast_to(np.asarray(self.spreads, dtype=float), (m,)))
        weights = np.asarray(self.weights, dtype=float)
        if m == 0:
            raise ConfigurationError("mixture needs at least one component")
        if weights.shape != (m,):
            raise ConfigurationError(f"expected {m} weights, got {weights.shape}")
        if any(not s > 0 for s in spreads):
            raise ConfigurationError("spreads must be > 0")
        if np.any(weights < 0) or not weights.sum() > 0:
            raise ConfigurationError("weights must be non-negative with a positive sum")
        mask = self.subspace_mask
        if mask is not None:
            mask = tuple(sorted({int(i) for i in mask}))
            if not mask or mask[0] < 0 or mask[-1] >= d:
                raise ConfigurationError(f"subspace mask must name dimensions in [0, {d})")
        means = means.copy()
        means.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "spreads", spreads)
        object.__setattr__(self, "weights", tuple(float(w) for w in weights / weights.sum()))
        object.__setattr__(self, "subspace_mask", mask)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def active(self) -> np.ndarray:
        """Boolean mask of dimensions that receive noise."""
        out = np.zeros(self.dim, dtype=bool)
        if self.subspace_mask is None:
            out[:] = True
        else:
            out[list(self.subspace_mask)] = True
        return out


def random_mixture(
    dim: int,
    n_components: int,
    seed: int,
    mean_scale: float = 4.0,
    spread: float = 1.0,
    weights: Optional[Sequence[float]] = None,
) -> MixtureSpec:
    """Mixture with component means drawn from N(0, mean_scale^2 I)."""
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((n_components, dim)) * mean_scale
    if weights is None:
        weights = np.full(n_components, 1.0 / n_components)
    return MixtureSpec(means, (spread,) * n_components, tuple(weights))


def restrict_to_subspace(spec: MixtureSpec, active_dims: Sequence[int], pin_value: float = 0.0) -> MixtureSpec:
    """Deployment-style copy of ``spec`` living in an affine subspace.

    Inactive dimensions of every mean are moved to ``pin_value`` and carry no
    variance, so samples only vary along ``active_dims``.
    """
    active = np.zeros(spec.dim, dtype=bool)
    active[list(active_dims)] = True
    means = np.array(spec.means)
    means[:, ~active] = pin_value
    return MixtureSpec(means, spec.spreads, spec.weights, tuple(active_dims))


def _pick_components(weights: Sequence[float], u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(weights)
    idx = np.searchsorted(cum, u * cum[-1], side="right")
    return np.minimum(idx, len(weights) - 1)


def sample_mixture(spec: MixtureSpec, count: int, seed: int, return_components: bool = False):
    """Draw ``count`` descriptors; optionally also the component index of each."""
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    rng = np.random.default_rng(seed)
    comps = _pick_components(spec.weights, rng.random(count))
    noise = rng.standard_normal((count, spec.dim)) * np.asarray(spec.spreads)[comps, None]
    noise[:, ~spec.active()] = 0.0
    out = spec.means[comps] + noise
    return (out, comps) if return_components else out


@dataclass(frozen=True)
class SyntheticTrajectory:
    positions: np.ndarray  # (N, 3) meters
    descriptors: np.ndarray  # (N, d)
    revisit_pairs: frozenset[tuple[int, int]]
    place_of_frame: np.ndarray  # (N,)

    def __len__(self) -> int:
        return self.positions.shape[0]


def ring_positions(n_places: int, spacing: float) -> np.ndarray:
    """``n_places`` points on a circle of circumference n_places * spacing, z = 0."""
    radius = n_places * spacing / (2 * np.pi)
    theta = 2 * np.pi * np.arange(n_places) / n_places
    return np.stack([radius * np.cos(theta), radius * np.sin(theta), np.zeros(n_places)], axis=1)


def make_loop_trajectory(
    spec: MixtureSpec,
    n_places: int,
    passes: int,
    descriptor_noise: float,
    seed: int,
    gt_radius_m: float = DEFAULT_GT_RADIUS_M,
) -> SyntheticTrajectory:
    """Drive ``passes`` laps around a ring of ``n_places`` places.

    Each place gets a base descriptor from ``spec``; the first lap emits it
    unchanged and every later lap adds N(0, descriptor_noise^2) on the mixture's
    active dimensions. Adjacent places are 2 * gt_radius_m apart along the
    ring, so their straight-line distance exceeds the radius.
    """
    if n_places < 2:
        raise ConfigurationError("need at least two places")
    if passes < 1:
        raise ConfigurationError("passes must be >= 1")
    if descriptor_noise < 0:
        raise ConfigurationError("descriptor noise must be >= 0")
    base_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    base = sample_mixture(spec, n_places, int(base_seed.generate_state(1, dtype=np.uint64)[0]))
    rng = np.random.default_rng(noise_seed)
    active = spec.active()

    laps = [base]
    for _ in range(1, passes):
        noise = rng.standard_normal(base.shape) * descriptor_noise
        noise[:, ~active] = 0.0
        laps.append(base + noise)
    descriptors = np.concatenate(laps)
    positions = np.tile(ring_positions(n_places, 2.0 * gt_radius_m), (passes, 1))
    place = np.tile(np.arange(n_places), passes)
    pairs = frozenset(
        (a * n_places + p, b * n_places + p)
        for p in range(n_places)
        for a in range(passes)
        for b in range(a + 1, passes)
    )
    return SyntheticTrajectory(positions, descriptors, pairs, place)

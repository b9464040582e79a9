"""File formats: binary descriptor files, KITTI-style pose files, run configs, dataset specs and CSV emission."""

from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .datagen import MixtureSpec, make_loop_trajectory, random_mixture, restrict_to_subspace, sample_mixture
from .errors import ConfigurationError, DataError, FormatError, TruncationError
from .simulation import DEFAULT_GT_RADIUS_M, DEFAULT_WINDOW

MAGIC = b"DVPR"
VERSION = 1
HEADER = struct.Struct("<4sIII")


# -- descriptor files ------------------------------------------------------


def write_descriptors(path, descriptors) -> None:
    """Write an (N, d) matrix as little-endian float32 rows after a 16-byte header."""
    m = np.asarray(descriptors)
    if m.ndim != 2:
        raise DataError(f"expected an (N, d) matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DataError("refusing to write non-finite descriptor values")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, m.shape[0], m.shape[1]))
        fh.write(np.ascontiguousarray(m, dtype="<f4").tobytes())


def read_descriptors(path) -> tuple[int, np.ndarray]:
    """Return (dim, descriptors) with descriptors as an (N, dim) float32 array."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise TruncationError(f"{path}: {len(raw)} bytes is shorter than the header")
    magic, version, count, dim = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    expected = HEADER.size + 4 * count * dim
    if len(raw) != expected:
        raise TruncationError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(count, dim)
    if not np.all(np.isfinite(values)):
        raise DataError(f"{path}: non-finite descriptor values")
    return dim, values.astype(np.float32)


# -- pose files ------------------------------------------------------------


def parse_pose_line(line: str) -> tuple[float, float, float]:
    tokens = line.split()
    if len(tokens) != 12:
        raise FormatError(f"pose line has {len(tokens)} values, expected 12")
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"unparseable pose line: {exc}") from None
    if not all(math.isfinite(v) for v in vals):
        raise FormatError("pose line contains non-finite values")
    return vals[3], vals[7], vals[11]


def read_poses(path) -> np.ndarray:
    """Positions (translation column of each 3x4 row-major pose) as an (N, 3) array."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(parse_pose_line(line))
            except FormatError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    return np.array(out, dtype=np.float64).reshape(-1, 3)


def write_poses(path, positions) -> None:
    """Identity-rotation poses carrying the given translations."""
    with open(path, "w") as fh:
        for x, y, z in np.asarray(positions, dtype=np.float64).tolist():
            fh.write(f"1 0 0 {x!r} 0 1 0 {y!r} 0 0 1 {z!r}\n")


# -- dataset specs (JSON) --------------------------------------------------


def mixture_from_dict(d: dict, dim: Optional[int] = None) -> MixtureSpec:
    """Either explicit ``means``/``spreads``/``weights`` or random-mixture parameters."""
    if "means" in d:
        means = np.asarray(d["means"], dtype=float)
        m = means.shape[0]
        spec = MixtureSpec(means, tuple(np.broadcast_to(d.get("spreads", 1.0), (m,))), tuple(d.get("weights", [1.0] * m)))
    else:
        if dim is None and "dim" not in d:
            raise ConfigurationError("mixture needs a dimension")
        spec = random_mixture(
            int(d.get("dim", dim)),
            int(d.get("n_components", 1)),
            int(d.get("seed", 0)),
            mean_scale=float(d.get("mean_scale", 4.0)),
            spread=float(d.get("spread", 1.0)),
            weights=d.get("weights"),
        )
    if dim is not None and spec.dim != dim:
        raise ConfigurationError(f"mixture dimension {spec.dim} != declared dimension {dim}")
    return spec


def load_dataset_spec(path) -> dict:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON: {exc}") from None
    if "mixture" not in spec:
        raise ConfigurationError(f"{path}: missing 'mixture'")
    return spec


def training_from_spec(spec: dict) -> np.ndarray:
    mixture = mixture_from_dict(spec["mixture"], spec.get("dim"))
    section = spec.get("training")
    if section is None:
        raise ConfigurationError("dataset spec has no 'training' section")
    return sample_mixture(mixture, int(section["count"]), int(section.get("seed", 0)))


def deployment_from_spec(spec: dict):
    """(descriptors, positions, trajectory) for a dataset spec's deployment section."""
    mixture = mixture_from_dict(spec["mixture"], spec.get("dim"))
    section = spec.get("deployment")
    if section is None:
        raise ConfigurationError("dataset spec has no 'deployment' section")
    if "active_dims" in section:
        mixture = restrict_to_subspace(mixture, section["active_dims"], float(section.get("pin_value", 0.0)))
    traj = make_loop_trajectory(
        mixture,
        int(section["n_places"]),
        int(section.get("passes", 2)),
        float(section.get("descriptor_noise", 0.0)),
        int(section.get("seed", 0)),
        float(section.get("gt_radius_m", DEFAULT_GT_RADIUS_M)),
    )
    return traj.descriptors, traj.positions, traj


# -- run config --------------------------------------------------------------


@dataclass
class RunConfig:
    n: int = 2
    k: Optional[int] = None
    seed: int = 0
    trials: int = 10
    temporal_exclusion_window: int = DEFAULT_WINDOW
    gt_radius_m: float = DEFAULT_GT_RADIUS_M
    descriptor_path: Optional[Path] = None
    synthetic_spec: Optional[Path] = None
    pose_path: Optional[Path] = None
    training_descriptor_path: Optional[Path] = None
    training_spec: Optional[Path] = None
    output_dir: Path = Path("out")

    def __post_init__(self):
        if (self.descriptor_path is None) == (self.synthetic_spec is None):
            raise ConfigurationError("exactly one of descriptor_path / synthetic_spec is required")
        if (self.training_descriptor_path is None) == (self.training_spec is None):
            raise ConfigurationError("exactly one of training_descriptor_path / training_spec is required")
        if self.descriptor_path is not None and self.pose_path is None:
            raise ConfigurationError("descriptor_path requires pose_path")
        if self.k is None:
            self.k = self.n
        if self.n < 1 or self.k < 1 or self.trials < 1:
            raise ConfigurationError("n, k and trials must be >= 1")
        if self.temporal_exclusion_window < 0 or not self.gt_radius_m > 0:
            raise ConfigurationError("invalid window or ground-truth radius")

    def load_deployment(self) -> tuple[np.ndarray, np.ndarray]:
        if self.synthetic_spec is not None:
            desc, pos, _ = deployment_from_spec(load_dataset_spec(self.synthetic_spec))
            return desc, pos
        _, desc = read_descriptors(self.descriptor_path)
        pos = read_poses(self.pose_path)
        if len(pos) != len(desc):
            raise ConfigurationError(f"{len(desc)} descriptors but {len(pos)} poses")
        return desc.astype(np.float64), pos

    def load_training(self) -> np.ndarray:
        if self.training_spec is not None:
            return training_from_spec(load_dataset_spec(self.training_spec))
        return read_descriptors(self.training_descriptor_path)[1].astype(np.float64)


_INT_KEYS = {"n", "k", "seed", "trials", "temporal_exclusion_window"}
_PATH_KEYS = {"descriptor_path", "synthetic_spec", "pose_path", "training_descriptor_path", "training_spec", "output_dir"}


def parse_config(text: str, base_dir: Path = Path(".")) -> RunConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment. Relative paths resolve against ``base_dir``."""
    known = {f.name for f in fields(RunConfig)}
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"config line {lineno}: duplicate key {key!r}")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _PATH_KEYS:
                values[key] = Path(os.path.normpath(base_dir / value))
            else:
                values[key] = float(value)
        except ValueError:
            raise ConfigurationError(f"config line {lineno}: bad value for {key}: {value!r}") from None
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


# -- CSV / JSON emission -----------------------------------------------------


def fmt(value) -> str:
    """Locale-independent cell text; reals carry 9 significant digits."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")

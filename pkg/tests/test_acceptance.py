"""Exit criteria. Each test prints one PASS/FAIL line in the 'acceptance criteria' summary section."""

import dataclasses
import struct
from pathlib import Path

import numpy as np
import pytest

import oracles
from _acceptance import criterion
from dvpr import io
from dvpr.cli import main
from dvpr.clustering import _assign, train_kmeans, train_kmeans_best
from dvpr.datagen import make_loop_trajectory, random_mixture
from dvpr.descriptors import DescriptorStore, FrameId, nearest_neighbor
from dvpr.errors import FormatError, TruncationError
from dvpr.evaluation import pr_curve, relative_auc, sweep
from dvpr.routing import BandwidthLedger, OwnershipMap, broadcast_bytes_baseline, query_bytes, worst_balance_ratio
from dvpr.simulation import Dataset, Mode, QueryRecord, SwarmConfig, run_simulation

SWEEP_N = [2, 5, 10, 20]
SWEEP_TRIALS = 10
CONFIGS = Path(__file__).resolve().parents[1] / "configs"

_sweeps = {}


def _sweep(loop, training, n_values=SWEEP_N):
    rows, means = sweep(loop.descriptors, loop.positions, training, n_values, SWEEP_TRIALS, base_seed=0)
    return {m.n: m for m in means}


def test_c01_bandwidth_arithmetic():
    with criterion(1, "bandwidth: 512-byte query, broadcast/unicast == n for n in [1, 20]", 1.0):
        assert query_bytes(128, 4) == 512
        for n in range(1, 21):
            assert broadcast_bytes_baseline(128, 4, n) / query_bytes(128, 4) == n
            assert broadcast_bytes_baseline(128, 4, n) == 512 * n


def test_c02_single_robot_equivalence():
    with criterion(2, "n=1 decentralized == centralized except bytes_sent; relative AUC 1.0", 5.0):
        spec = random_mixture(128, 8, seed=21, mean_scale=1.0)
        traj = make_loop_trajectory(spec, 250, 2, 0.3, seed=21)
        ds = Dataset.from_sequence(traj.descriptors, traj.positions, 1)
        model = train_kmeans(traj.descriptors, 1, seed=0)
        dec = run_simulation(ds, model, OwnershipMap.modular(1, 1), SwarmConfig(1))
        cen = run_simulation(ds, None, None, SwarmConfig(1, mode=Mode.CENTRALIZED))
        assert len(dec.records) == len(cen.records) == 500
        strip = lambda r: dataclasses.replace(r, bytes_sent=0, routed_robot=0)  # noqa: E731
        assert [strip(r) for r in dec.records] == [strip(r) for r in cen.records]
        assert relative_auc(pr_curve(dec.records), pr_curve(cen.records)) == 1.0


def test_c03_retrieval_oracle():
    with criterion(3, "nearest_neighbor == exhaustive double-loop oracle on 100 16-dim descriptors", 1.0):
        rng = np.random.default_rng(3)
        entries = [(FrameId(0, g, g), rng.standard_normal(16)) for g in range(100)]
        store = DescriptorStore(16)
        for f, v in entries:
            store.add(f, v)
        queries = [v for _, v in entries] + list(rng.standard_normal((20, 16)))
        for i, q in enumerate(queries):
            exclude = (lambda f, i=i: f.global_index == i) if i < 100 else (lambda f: False)
            got = nearest_neighbor(q, store, exclude)
            want = oracles.nearest(q, entries, exclude)
            assert got[0] == want[0]
            assert abs(got[1] - want[1]) <= 1e-9


def test_c04_kmeans_oracle():
    with criterion(4, "k-means: best-of-10 SSE == enumerated optimum; fixed point + no empty clusters x100", 10.0):
        pts = np.array([
            [0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.2, 0.9],
            [10.0, 10.0], [11.0, 10.0], [10.0, 11.5], [10.7, 10.4],
            [-10.0, 10.0], [-9.0, 10.0], [-10.0, 11.0], [-9.3, 10.8],
        ])
        best_sse, best_labels = oracles.optimal_partition_sse(pts, 3)
        model = train_kmeans_best(pts, 3, seeds=range(10))
        assert abs(model.training_meta.final_sse - best_sse) <= 1e-9 * best_sse
        assert oracles.same_partition(_assign(pts, model.centroids)[0].tolist(), best_labels)

        rng = np.random.default_rng(4)
        for trial in range(100):
            n = int(rng.integers(3, 80))
            k = int(rng.integers(1, min(n, 10) + 1))
            x = rng.standard_normal((n, int(rng.integers(1, 6))))
            m = train_kmeans(x, k, seed=trial, tol=0.0, max_iters=1000)
            labels, _ = _assign(x, m.centroids)
            assert np.bincount(labels, minlength=k).min() >= 1
            assert m.training_meta.converged
            means = np.stack([x[labels == j].mean(axis=0) for j in range(k)])
            np.testing.assert_allclose(m.centroids, means, rtol=0, atol=1e-12)


def _random_records(rng):
    n = int(rng.integers(1, 40))
    recs = []
    for g in range(n):
        gt = bool(rng.random() < 0.7)
        has_match = bool(rng.random() < 0.85)
        dist = float(np.round(rng.random() * 5, int(rng.integers(1, 4)))) if has_match else None
        tp = has_match and gt and bool(rng.random() < 0.6)
        recs.append(QueryRecord(FrameId(0, g, g), 0, FrameId(1, g, 1000 + g) if has_match else None, dist, gt, tp, 512))
    if not any(r.has_gt_match for r in recs):
        recs[0] = dataclasses.replace(recs[0], has_gt_match=True)
    return recs


def test_c05_pr_auc():
    with criterion(5, "PR/AUC: hand oracle exact; monotone recall, auc in [0,1], permutation-invariant x1000", 5.0):
        truth = [True, True, False, True, False, False]
        recs = [QueryRecord(FrameId(0, i, i), 0, FrameId(1, i, 100 + i), 0.1 * (i + 1), True, t, 512)
                for i, t in enumerate(truth)]
        curve = pr_curve(recs)
        assert curve.precision.tolist() == [1.0, 1.0, 2 / 3, 3 / 4, 3 / 5, 1 / 2]
        assert curve.recall.tolist() == [1 / 6, 2 / 6, 2 / 6, 3 / 6, 3 / 6, 3 / 6]
        assert curve.auc == pytest.approx(65 / 144, rel=1e-12, abs=0)

        rng = np.random.default_rng(5)
        for _ in range(1000):
            recs = _random_records(rng)
            c = pr_curve(recs)
            assert np.all(np.diff(c.recall) >= 0)
            assert 0.0 <= c.auc <= 1.0
            perm = [recs[i] for i in rng.permutation(len(recs))]
            p = pr_curve(perm)
            assert p.auc == c.auc and p.points == c.points


def test_c06_worst_balance_ratio():
    with criterion(6, "worst balance ratio in [1, n]; 50% of queries on 1 of 20 robots -> 10.0", 1.0):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            n = int(rng.integers(1, 25))
            counts = rng.integers(0, 100, size=n)
            if counts.sum() == 0:
                counts[0] = 1
            r = worst_balance_ratio(BandwidthLedger.from_counts(counts, 512))
            assert 1.0 <= r <= n
        assert worst_balance_ratio(BandwidthLedger.from_counts([500] + [0] * 19)) == 20.0
        half = BandwidthLedger.from_counts([190] + [10] * 19, 512)
        assert worst_balance_ratio(half) == 10.0


def test_c07_recall_trend(shift_free_loop, sweep_training):
    with criterion(7, "shift-free sweep: mean relative AUC <= 1 for all n, n=20 < n=2", 120.0) as notes:
        means = _sweeps["free"] = _sweep(shift_free_loop, sweep_training)
        notes.append(" ".join(f"n={n}:{means[n].relative_auc:.4f}" for n in SWEEP_N))
        for n in SWEEP_N:
            assert means[n].relative_auc <= 1.0, (n, means[n].relative_auc)
        assert means[20].relative_auc < means[2].relative_auc


def test_c08_imbalance_under_shift(shifted_loop, shift_free_loop, sweep_training):
    with criterion(8, "subspace-shifted sweep: mean worst balance ratio at n=10 >= 2 and > shift-free", 120.0) as notes:
        shifted = _sweep(shifted_loop, sweep_training)
        free = _sweeps.get("free") or _sweep(shift_free_loop, sweep_training, [10])
        notes.append(f"shifted {shifted[10].worst_balance_ratio:.3f} vs shift-free {free[10].worst_balance_ratio:.3f}")
        assert shifted[10].worst_balance_ratio >= 2.0
        assert shifted[10].worst_balance_ratio > free[10].worst_balance_ratio


def test_c09_sweep_determinism(tmp_path):
    with criterion(9, "CLI sweep twice with identical config -> byte-identical CSVs", 120.0):
        args = ["sweep", "--config", str(CONFIGS / "loop.cfg"), "--n-values", "2,5,10,20", "--trials", "10"]
        assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
        assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
        for name in ("sweep.csv", "sweep_mean.csv"):
            a = (tmp_path / "a" / name).read_bytes()
            assert len(a.splitlines()) > 1
            assert a == (tmp_path / "b" / name).read_bytes()


def test_c10_format_roundtrips(tmp_path):
    with criterion(10, "descriptor round-trip lossless; truncated/bad-magic rejected; pose 3/7/11 rule", 1.0):
        rng = np.random.default_rng(10)
        values = rng.standard_normal((100, 128)).astype(np.float32)
        path = tmp_path / "d.dvpr"
        io.write_descriptors(path, values)
        assert io.read_descriptors(path)[1].tobytes() == values.tobytes()

        raw = path.read_bytes()
        (tmp_path / "t.dvpr").write_bytes(raw[:-1])
        with pytest.raises(TruncationError):
            io.read_descriptors(tmp_path / "t.dvpr")
        (tmp_path / "m.dvpr").write_bytes(b"NOPE" + raw[4:])
        with pytest.raises(FormatError):
            io.read_descriptors(tmp_path / "m.dvpr")
        (tmp_path / "e.dvpr").write_bytes(struct.pack("<4sIII", b"DVPR", 1, 0, 128))
        assert io.read_descriptors(tmp_path / "e.dvpr")[1].shape == (0, 128)

        assert io.parse_pose_line("1 0 0 5 0 1 0 6 0 0 1 7") == (5.0, 6.0, 7.0)
        row = [float(i) / 10 for i in range(12)]
        assert io.parse_pose_line(" ".join(map(str, row))) == (row[3], row[7], row[11])
        with pytest.raises(FormatError):
            io.parse_pose_line("1 0 0 5 0 1 0 6 0 0 1 7 0")

"""Command-line entry point: ``dvpr <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .clustering import train_kmeans
from .errors import DvprError
from .evaluation import confusion_matrix, run_pair, sweep
from .routing import broadcast_bytes_baseline, query_bytes, FLOAT32_BYTES
from .simulation import Mode

RECORD_HEADER = (
    "query_robot", "query_local", "query_global", "routed_robot",
    "match_robot", "match_local", "match_global", "nn_distance",
    "has_gt_match", "is_true_positive", "bytes_sent",
)


def _out_dir(args, cfg) -> Path:
    out = Path(args.out_dir) if getattr(args, "out_dir", None) else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _record_row(r):
    m = r.match
    return (
        r.query.robot, r.query.local_index, r.query.global_index, r.routed_robot,
        m.robot if m else None, m.local_index if m else None, m.global_index if m else None,
        r.nn_distance, r.has_gt_match, r.is_true_positive, r.bytes_sent,
    )


def _run_pair(cfg):
    desc, pos = cfg.load_deployment()
    training = cfg.load_training()
    return desc, run_pair(desc, pos, training, cfg.n, cfg.seed, k=cfg.k,
                          window=cfg.temporal_exclusion_window, gt_radius_m=cfg.gt_radius_m)


def cmd_train_clusters(args) -> None:
    cfg = io.load_config(args.config)
    model = train_kmeans(cfg.load_training(), cfg.k, seed=cfg.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    io.write_descriptors(args.out, model.centroids)
    meta = model.training_meta
    print(f"k={model.k} iterations={meta.iterations_run} sse={meta.final_sse:.9g} -> {args.out}")


def cmd_simulate(args) -> None:
    cfg = io.load_config(args.config)
    out = _out_dir(args, cfg)
    desc, pair = _run_pair(cfg)
    dim = desc.shape[1]
    for mode, result, curve in (
        (Mode.DECENTRALIZED, pair.decentralized, pair.pr_decentralized),
        (Mode.CENTRALIZED, pair.centralized, pair.pr_centralized),
    ):
        io.write_csv(out / f"records_{mode.value}.csv", RECORD_HEADER, map(_record_row, result.records))
        io.write_csv(out / f"pr_{mode.value}.csv", ("threshold", "precision", "recall"), curve.points)
    summary = {
        "n": cfg.n,
        "k": cfg.k,
        "seed": cfg.seed,
        "dim": dim,
        "frames": len(desc),
        "auc_centralized": pair.pr_centralized.auc,
        "auc_decentralized": pair.pr_decentralized.auc,
        "relative_auc": pair.relative_auc,
        "worst_balance_ratio": pair.worst_balance_ratio,
        "bytes_per_query_decentralized": query_bytes(dim, FLOAT32_BYTES),
        "bytes_per_query_broadcast": broadcast_bytes_baseline(dim, FLOAT32_BYTES, cfg.n),
        "bytes_decentralized_total": pair.decentralized.ledger.total_bytes,
        "bytes_broadcast_baseline_total": pair.centralized.ledger.total_bytes,
        "queries_per_robot": pair.decentralized.ledger.per_robot_queries,
    }
    io.write_json(out / "summary.json", summary)
    print(f"relative_auc={summary['relative_auc']:.9g} worst_balance_ratio={summary['worst_balance_ratio']:.9g} -> {out}")


def cmd_sweep(args) -> None:
    cfg = io.load_config(args.config)
    out = _out_dir(args, cfg)
    if args.n_values:
        n_values = [int(v) for v in args.n_values.split(",")]
    else:
        n_values = range(args.n_min, args.n_max + 1)
    trials = args.trials if args.trials is not None else cfg.trials
    desc, pos = cfg.load_deployment()
    rows, means = sweep(desc, pos, cfg.load_training(), n_values, trials, cfg.seed,
                        window=cfg.temporal_exclusion_window, gt_radius_m=cfg.gt_radius_m)
    io.write_csv(out / "sweep.csv", ("n", "trial", "relative_auc", "worst_balance_ratio"),
                 ((r.n, r.trial, r.relative_auc, r.worst_balance_ratio) for r in rows))
    io.write_csv(out / "sweep_mean.csv", ("n", "trials", "relative_auc", "worst_balance_ratio"),
                 ((m.n, m.trials, m.relative_auc, m.worst_balance_ratio) for m in means))
    for m in means:
        print(f"n={m.n:3d} relative_auc={m.relative_auc:.4f} worst_balance_ratio={m.worst_balance_ratio:.3f}")


def cmd_confusion(args) -> None:
    cfg = io.load_config(args.config)
    out = _out_dir(args, cfg)
    _, pair = _run_pair(cfg)
    result = pair.centralized if args.mode == Mode.CENTRALIZED.value else pair.decentralized
    cm = confusion_matrix(result.records, args.threshold)
    header = ["query_global"] + [str(g) for g in cm.global_indices.tolist()]
    io.write_csv(out / "confusion_distance.csv", header,
                 ([g, *row] for g, row in zip(cm.global_indices.tolist(), cm.distance.tolist())))
    io.write_csv(out / "confusion_match.csv", header,
                 ([g, *row] for g, row in zip(cm.global_indices.tolist(), cm.match.astype(bool).tolist())))
    print(f"{int(cm.match.sum())} matches at threshold {args.threshold:g} -> {out}")


def cmd_feature_scatter(args) -> None:
    cfg = io.load_config(args.config)
    out = _out_dir(args, cfg)
    training = cfg.load_training()
    deployment, _ = cfg.load_deployment()
    if training.shape[1] < 2:
        raise DvprError("feature scatter needs descriptors with at least two dimensions")
    rows = [("training", a, b) for a, b in training[:, :2].tolist()]
    rows += [("deployment", a, b) for a, b in deployment[:, :2].tolist()]
    io.write_csv(out / "feature_scatter.csv", ("set", "dim0", "dim1"), rows)
    print(f"{len(rows)} points -> {out / 'feature_scatter.csv'}")


def cmd_gen_data(args) -> None:
    spec = io.load_dataset_spec(args.spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "deployment" in spec:
        desc, pos, _ = io.deployment_from_spec(spec)
        io.write_descriptors(out / "descriptors.dvpr", desc)
        io.write_poses(out / "poses.txt", pos)
        written += ["descriptors.dvpr", "poses.txt"]
    if "training" in spec:
        io.write_descriptors(out / "training.dvpr", io.training_from_spec(spec))
        written.append("training.dvpr")
    if not written:
        raise DvprError("dataset spec has neither 'training' nor 'deployment'")
    print(f"wrote {', '.join(written)} -> {out}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dvpr", description="Cluster-routed decentralized place recognition.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("train-clusters", help="train k-means on the training source")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_clusters)

    s = sub.add_parser("simulate", help="one decentralized + centralized run")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="relative AUC and balance ratio over robot counts")
    s.add_argument("--config", required=True)
    s.add_argument("--n-min", type=int, default=2)
    s.add_argument("--n-max", type=int, default=20)
    s.add_argument("--n-values", help="comma-separated robot counts; overrides --n-min/--n-max")
    s.add_argument("--trials", type=int)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("confusion", help="query x candidate match matrices")
    s.add_argument("--config", required=True)
    s.add_argument("--threshold", type=float, required=True)
    s.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.CENTRALIZED.value)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_confusion)

    s = sub.add_parser("feature-scatter", help="first two descriptor dimensions, training vs deployment")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_feature_scatter)

    s = sub.add_parser("gen-data", help="materialize a synthetic dataset spec")
    s.add_argument("--spec", required=True)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_gen_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (DvprError, OSError, KeyError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"dvpr {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

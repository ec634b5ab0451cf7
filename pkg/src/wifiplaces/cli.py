"""Command-line driver: train, tune, evaluate, predict.

Every command is deterministic given --seed. Reports write the delimited
output first, then render the matching figure next to it. Model files are
written atomically (write-then-rename).
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys

import numpy as np

from . import cluster, evaluate, inference, model_io, tune
from .chowliu import build_tree, estimate_stats
from .dataset import Dataset, DatasetError, WifiScan, load_ujiindoorloc
from .featurize import BinningConfig, featurize_records


def _thread_limit(n):
    if n is None:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def _binning(args) -> BinningConfig:
    return BinningConfig(bin_width=float(args.bin_width))


def _train_pipeline(dataset: Dataset, config: BinningConfig, seed: int, alpha: float,
                    eps: float, min_pts: int):
    """ingest -> cluster -> split -> tree. Returns (assignment, split, tree)."""
    assignment = cluster.dbscan(dataset, cluster.ClusterParams(eps=eps, min_pts=min_pts))
    split = cluster.split_dataset(assignment, seed)
    env_bits = featurize_records(dataset, split.environment_scans, config)
    stats = estimate_stats(env_bits, alpha=alpha)
    tree = build_tree(stats)
    return assignment, split, tree


def cmd_train(args) -> int:
    dataset = load_ujiindoorloc(args.train_csv)
    config = _binning(args)
    print(f"loaded {len(dataset)} records, {len(dataset.registry)} networks")
    assignment, split, tree = _train_pipeline(
        dataset, config, args.seed, args.alpha, args.eps, args.min_pts
    )
    print(f"dbscan: {assignment.count} clusters (eps={args.eps}, min_pts={args.min_pts})")
    detector = inference.DetectorModel(pzge=args.pzge, pzgne=args.pzgne)
    db = inference.build_place_database(split, dataset, tree, detector, config)
    print(
        f"tree: {tree.n_features} features, {len(tree.roots)} component(s), "
        f"total MI {tree.total_mi:.4f}"
    )
    print(f"place database: {db.n_entries} entries")
    model_io.save_model(args.model, db, split_seed=args.seed)
    print(f"model written to {args.model}")
    if args.export_split:
        with open(args.export_split, "w") as fh:
            cluster.export_split(split, assignment, fh)
        print(f"split written to {args.export_split}")
    return 0


def cmd_tune(args) -> int:
    dataset = load_ujiindoorloc(args.train_csv)
    config = _binning(args)
    print(f"loaded {len(dataset)} records")
    assignment, split, tree = _train_pipeline(
        dataset, config, args.seed, args.alpha, args.eps, args.min_pts
    )
    print(f"dbscan: {assignment.count} clusters; tree built")
    subtraining, validation = tune.split_for_validation(
        split.place_db_scans, seed=args.seed
    )
    grid = tune.GridSpec(
        pzge_log_start=args.pzge_log_start,
        pzge_log_end=args.pzge_log_end,
        pzgne_log_start=args.pzgne_log_start,
        pzgne_log_end=args.pzgne_log_end,
        log_step=args.log_step,
    )
    n_points = len(grid.pzge_values()) * len(grid.pzgne_values())
    print(f"sweeping {n_points} grid points ...")
    result = tune.grid_search(
        subtraining,
        validation,
        dataset,
        tree,
        config,
        grid,
        progress=tune.default_progress,
    )
    with open(args.out, "w") as fh:
        tune.export_surface(result, fh)
    print(f"surface written to {args.out}")
    fig_path = os.path.splitext(args.out)[0] + ".png"
    from .plots import save_surface_figure

    save_surface_figure(
        fig_path,
        result.pzge_values,
        result.pzgne_values,
        result.surface,
        best=(result.best_pzge, result.best_pzgne),
    )
    print(f"surface figure written to {fig_path}")
    print(
        f"best: PzGe={result.best_pzge:.4f} PzGne={result.best_pzgne:.4f} "
        f"score={result.best_score:.4f}"
    )
    return 0


def cmd_evaluate(args) -> int:
    db, _ = model_io.load_model(args.model)
    testset = load_ujiindoorloc(args.test_csv)
    if testset.registry != db.registry:
        raise DatasetError("test CSV registry does not match the model registry")
    print(f"model: {db.n_entries} entries; test set: {len(testset)} queries")
    query_bits = featurize_records(testset, range(len(testset)), db.config)
    top, post = inference.match_many(db, query_bits)
    predictions = [
        evaluate.Prediction(query_index=i, predicted=db.labels[e], entry_index=int(e))
        for i, e in enumerate(top)
    ]
    truths = [r.truth for r in testset.records]
    report = evaluate.evaluate_predictions(predictions, truths)
    os.makedirs(args.out, exist_ok=True)
    report_path = os.path.join(args.out, "report.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json() + "\n")
    matches_path = os.path.join(args.out, "matches.csv")
    with open(matches_path, "w") as fh:
        evaluate.export_matches(fh, predictions, truths, posteriors=post)
    fig_path = os.path.join(args.out, "matches.png")
    from .plots import save_match_figure

    db_lon, db_lat, _, _ = db.label_arrays()
    q_lon, q_lat, _, _ = testset.truth_arrays()
    save_match_figure(
        fig_path,
        db_lon,
        db_lat,
        q_lon,
        q_lat,
        np.array([p.predicted.longitude for p in predictions]),
        np.array([p.predicted.latitude for p in predictions]),
    )
    e_d = "undefined" if report.e_d_m is None else f"{report.e_d_m:.2f} m"
    print(f"score={report.score:.4f} e_d={e_d} ({report.n_correct}/{report.n_total})")
    print(f"outputs in {args.out}: report.json, matches.csv, matches.png")
    return 0


def _parse_inline_scan(text: str, registry) -> WifiScan:
    readings = {}
    for pair in text.split(";"):
        pair = pair.strip()
        if not pair:
            continue
        name, _, value = pair.partition("=")
        idx = registry.index_of(name.strip())
        if idx is None:
            print(f"warning: unknown BSSID {name.strip()!r} ignored", file=sys.stderr)
            continue
        readings[idx] = float(value)
    return WifiScan(readings)


def _parse_scan_csv(path, registry) -> WifiScan:
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        row = next(reader, None)
    if header is None or row is None:
        raise DatasetError(f"{path}: need a header and one data row")
    readings = {}
    for name, cell in zip(header, row):
        idx = registry.index_of(name)
        if idx is None or cell == "":
            continue
        v = float(cell)
        if v == 100.0:
            continue
        readings[idx] = v
    return WifiScan(readings)


def cmd_predict(args) -> int:
    db, _ = model_io.load_model(args.model)
    if args.scan is not None:
        scan = _parse_inline_scan(args.scan, db.registry)
    else:
        scan = _parse_scan_csv(args.scan_csv, db.registry)
    result = inference.match(scan, db)
    rows = []
    for rank, (entry_idx, posterior) in enumerate(result.top(args.top_k), start=1):
        label = db.labels[entry_idx]
        print(
            f"#{rank} entry {entry_idx} p={posterior:.4f} "
            f"building={label.building_id} floor={label.floor} "
            f"lon={label.longitude:.2f} lat={label.latitude:.2f}"
        )
        rows.append((0, entry_idx, posterior, label))
    if args.out:
        with open(args.out, "w") as fh:
            inference.export_match_results(fh, rows)
        print(f"matches written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wifiplaces",
        description="WiFi-fingerprint place recognition over the UJIIndoorLoc CSVs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=42, help="seed for all randomness")
        p.add_argument("--threads", type=int, default=None, help="cap BLAS threads")
        p.add_argument("--alpha", type=float, default=0.5, help="stats pseudo-count")
        p.add_argument("--eps", type=float, default=1.0, help="dbscan radius, metres")
        p.add_argument("--min-pts", type=int, default=1, help="dbscan core threshold")
        p.add_argument(
            "--bin-width",
            type=float,
            default=10.0,
            help="RSSI bin width in dBm (5 or 10)",
        )

    p_train = sub.add_parser("train", help="build and save a model")
    common(p_train)
    p_train.add_argument("--train-csv", required=True)
    p_train.add_argument("--pzge", type=float, default=0.4916, help="p(z=1|e=0)")
    p_train.add_argument("--pzgne", type=float, default=0.0055, help="p(z=0|e=1)")
    p_train.add_argument("--model", required=True, help="output model JSON path")
    p_train.add_argument("--export-split", default=None, help="also write split CSV")
    p_train.set_defaults(func=cmd_train)

    p_tune = sub.add_parser("tune", help="grid-search detector parameters")
    common(p_tune)
    p_tune.add_argument("--train-csv", required=True)
    p_tune.add_argument("--out", required=True, help="output surface CSV path")
    p_tune.add_argument("--pzge-log-start", type=float, default=-0.01)
    p_tune.add_argument("--pzge-log-end", type=float, default=-4.0)
    p_tune.add_argument("--pzgne-log-start", type=float, default=-2.0)
    p_tune.add_argument("--pzgne-log-end", type=float, default=-8.0)
    p_tune.add_argument("--log-step", type=float, default=0.05)
    p_tune.set_defaults(func=cmd_tune)

    p_eval = sub.add_parser("evaluate", help="score a model on a test CSV")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--test-csv", required=True)
    p_eval.add_argument("--out", required=True, help="output directory")
    p_eval.add_argument("--threads", type=int, default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_pred = sub.add_parser("predict", help="match one scan against a model")
    p_pred.add_argument("--model", required=True)
    group = p_pred.add_mutually_exclusive_group(required=True)
    group.add_argument("--scan", help="inline scan: 'WAP001=-70;WAP002=-85'")
    group.add_argument("--scan-csv", help="CSV with a header and one data row")
    p_pred.add_argument("--top-k", type=int, default=5)
    p_pred.add_argument("--out", default=None, help="write top-k match CSV")
    p_pred.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with _thread_limit(getattr(args, "threads", None)):
            return args.func(args)
    except (DatasetError, model_io.ModelFormatError, inference.InferenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

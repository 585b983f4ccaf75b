"""Command-line surface: split generation, training runs, ablation
sweeps, dual-graph construction, hidden-state export, and reporting.

A run manifest is a JSON document:

    {
      "dataset": "data/cora",            // canonical dataset directory
      "splits": ["standard"],            // names under <dataset>/splits/
      "method": "graphmix",              // or a list of methods
      "config": {...} | "configs/x.json",// flat config overrides
      "seeds": [0, 1, 2],
      "out": "runs/cora",
      "normalize_features": true,        // optional
      "features": "auto"                 // optional: auto|dense|sparse
    }

Dataset paths are resolved against the current directory first, then
against $GRAPHMIX_DATA_DIR. All trial outputs land under "out"; results
CSVs are byte-stable for identical manifests (timings go to a separate
file).
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import model
from .evaluate import aggregate, export_hidden
from .graphdata import (
    DataFormatError,
    SplitSpec,
    dualize,
    load_dataset,
    load_signed_edges,
    load_split,
    normalize_adjacency,
    random_split,
    save_dataset,
    save_split,
)
from .trainer import METHODS, TrainConfig, TrainingDiverged, run_trial

RESULTS_HEADER = ["dataset", "split", "method", "seed", "metric", "value"]


def resolve_dataset_path(path: str) -> str:
    if os.path.isabs(path) or os.path.exists(path):
        return path
    root = os.environ.get("GRAPHMIX_DATA_DIR")
    if root:
        candidate = os.path.join(root, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _guard_overwrite(path: str, overwrite: bool) -> None:
    if os.path.exists(path) and not overwrite:
        raise FileExistsError(f"{path} exists; pass --overwrite to replace it")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value: float) -> str:
    return repr(float(value))


def _load_manifest(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        manifest = json.load(f)
    for key in ("dataset", "splits", "method", "seeds", "out"):
        if key not in manifest:
            raise ValueError(f"manifest missing key {key!r}")
    manifest["dataset"] = resolve_dataset_path(manifest["dataset"])
    if not os.path.isdir(manifest["dataset"]):
        raise ValueError(f"dataset directory not found: {manifest['dataset']}")
    methods = manifest["method"]
    if isinstance(methods, str):
        methods = [methods]
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    manifest["method"] = methods
    if not manifest["seeds"]:
        raise ValueError("manifest needs at least one seed")
    config = manifest.get("config", {})
    if isinstance(config, str):
        config_path = config
        if not os.path.exists(config_path):
            config_path = os.path.join(os.path.dirname(path), config)
        with open(config_path, encoding="utf-8") as f:
            config = json.load(f)
    manifest["config"] = config
    return manifest


def _base_config(overrides: dict) -> TrainConfig:
    merged = dict(overrides)
    merged.pop("seed", None)
    cfg = TrainConfig.from_dict({**merged, "seed": 0})
    return cfg


def _trial_task(args):
    dataset, a_hat, cfg, method = args
    return run_trial(dataset, a_hat, cfg, method)


def _run_tasks(tasks, jobs: int):
    """Run (key, (dataset, a_hat, cfg, method)) tasks; returns
    ({key: TrialResult}, {key: error message})."""
    results, failures = {}, {}
    if jobs <= 1:
        for key, args in tasks:
            try:
                results[key] = _trial_task(args)
            except TrainingDiverged as e:
                failures[key] = str(e)
        return results, failures
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {key: pool.submit(_trial_task, args) for key, args in tasks}
        for key, fut in futures.items():
            try:
                results[key] = fut.result()
            except TrainingDiverged as e:
                failures[key] = str(e)
    return results, failures


def _slug(text: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "-" for c in str(text))


def _prepare_out(out_dir: str, overwrite: bool, subdirs=("logs",)) -> None:
    _guard_overwrite(os.path.join(out_dir, "results.csv"), overwrite)
    os.makedirs(out_dir, exist_ok=True)
    for sub in subdirs:
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)


def _load_split_datasets(manifest: dict):
    base = load_dataset(
        manifest["dataset"],
        split=None,
        normalize_features=manifest.get("normalize_features", True),
        features=manifest.get("features", "auto"),
    )
    a_hat = normalize_adjacency(base.graph)
    per_split = {}
    for split in manifest["splits"]:
        masks = load_split(manifest["dataset"], split, base.num_nodes)
        ds = base.with_split(*masks)
        ds.validate()
        per_split[split] = ds
    return base, a_hat, per_split


def _emit_results(out_dir: str, rows, summary_groups, metric_of_group) -> None:
    rows = sorted(rows)
    _write_csv(
        os.path.join(out_dir, "results.csv"),
        RESULTS_HEADER if len(rows[0]) == 6 else RESULTS_HEADER[:3] + ["cell"] + RESULTS_HEADER[3:],
        rows,
    )
    summary = []
    for group_key in sorted(summary_groups):
        trials = summary_groups[group_key]
        report = aggregate(trials, metric_of_group[group_key])
        summary.append(
            list(group_key)
            + [report.metric, _fmt(report.mean), _fmt(report.std), report.n_trials]
        )
    has_cell = len(summary[0]) == 7
    header = (
        ["dataset", "method", "cell", "metric", "mean", "std", "n_trials"]
        if has_cell
        else ["dataset", "method", "metric", "mean", "std", "n_trials"]
    )
    _write_csv(os.path.join(out_dir, "summary.csv"), header, summary)


def cmd_split(args) -> int:
    path = resolve_dataset_path(args.dataset)
    dataset = load_dataset(path, split=None, normalize_features=False)
    written = []
    for seed in args.seeds:
        spec = SplitSpec(
            per_class_train=args.per_class,
            num_val=args.val,
            test="remaining" if args.test == "remaining" else int(args.test),
            seed=seed,
        )
        masks = random_split(dataset, spec)
        target = os.path.join(path, "splits", f"{seed}.json")
        _guard_overwrite(target, args.overwrite)
        written.append(save_split(path, str(seed), *masks))
    for w in written:
        print(w)
    return 0


def cmd_train(args) -> int:
    manifest = _load_manifest(args.manifest)
    out_dir = manifest["out"]
    _prepare_out(out_dir, args.overwrite, subdirs=("logs", "checkpoints"))
    base_cfg = _base_config(manifest["config"])
    base, a_hat, per_split = _load_split_datasets(manifest)

    tasks = []
    for split in manifest["splits"]:
        for method in manifest["method"]:
            for seed in manifest["seeds"]:
                key = (split, method, int(seed))
                cfg = replace(base_cfg, seed=int(seed))
                tasks.append((key, (per_split[split], a_hat, cfg, method)))
    results, failures = _run_tasks(tasks, args.jobs)

    rows, timing_rows = [], []
    summary_groups, metric_of_group = {}, {}
    for (split, method, seed), result in sorted(results.items()):
        stem = f"{_slug(split)}__{method}__seed{seed}"
        log_rows = [
            (epoch, sp, metric, _fmt(value))
            for epoch, sp, metric, value in result.log_rows()
        ]
        _write_csv(
            os.path.join(out_dir, "logs", f"{stem}.csv"),
            ["epoch", "split", "metric", "value"],
            log_rows,
        )
        model.save_checkpoint(
            result.best_params, os.path.join(out_dir, "checkpoints", f"{stem}.npz")
        )
        rows.append(
            (base.name, split, method, seed, result.metric_name, _fmt(result.selected_test_metric))
        )
        timing_rows.append((base.name, split, method, seed, _fmt(result.wall_clock)))
        group = (base.name, method)
        summary_groups.setdefault(group, []).append(result)
        metric_of_group[group] = result.metric_name

    if rows:
        _emit_results(out_dir, rows, summary_groups, metric_of_group)
    _write_csv(
        os.path.join(out_dir, "timings.csv"),
        ["dataset", "split", "method", "seed", "seconds"],
        sorted(timing_rows),
    )
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as f:
        f.write(base_cfg.to_json() + "\n")

    for key, message in sorted(failures.items()):
        print(f"trial {key} aborted: {message}", file=sys.stderr)
    return 2 if failures else 0


def _grid_cells(grid: dict):
    """Explicit {"cells": [...]} or {"product": {key: [values...]}}."""
    if "cells" in grid:
        cells = grid["cells"]
    elif "product" in grid:
        keys = sorted(grid["product"])
        cells = [
            dict(zip(keys, combo))
            for combo in itertools.product(*(grid["product"][k] for k in keys))
        ]
    else:
        raise ValueError('grid file needs a "cells" list or a "product" mapping')
    if not cells:
        raise ValueError("grid is empty")
    labels = []
    for cell in cells:
        if not isinstance(cell, dict):
            raise ValueError("each grid cell must be an object of config overrides")
        labels.append("&".join(f"{k}={cell[k]}" for k in sorted(cell)) or "base")
    return cells, labels


def cmd_ablate(args) -> int:
    manifest = _load_manifest(args.manifest)
    with open(args.grid, encoding="utf-8") as f:
        grid = json.load(f)
    cells, labels = _grid_cells(grid)
    out_dir = manifest["out"]
    _prepare_out(out_dir, args.overwrite)
    base_cfg = _base_config(manifest["config"])
    base, a_hat, per_split = _load_split_datasets(manifest)

    tasks = []
    for idx, cell in enumerate(cells):
        cfg_cell = TrainConfig.from_dict({**json.loads(base_cfg.to_json()), **cell})
        for split in manifest["splits"]:
            for method in manifest["method"]:
                for seed in manifest["seeds"]:
                    key = (idx, split, method, int(seed))
                    cfg = replace(cfg_cell, seed=int(seed))
                    tasks.append((key, (per_split[split], a_hat, cfg, method)))
    results, failures = _run_tasks(tasks, args.jobs)

    rows = []
    summary_groups, metric_of_group = {}, {}
    for (idx, split, method, seed), result in sorted(results.items()):
        stem = f"{_slug(split)}__{method}__c{idx:02d}__seed{seed}"
        _write_csv(
            os.path.join(out_dir, "logs", f"{stem}.csv"),
            ["epoch", "split", "metric", "value"],
            [(e, sp, m, _fmt(v)) for e, sp, m, v in result.log_rows()],
        )
        rows.append(
            (
                base.name,
                split,
                method,
                labels[idx],
                seed,
                result.metric_name,
                _fmt(result.selected_test_metric),
            )
        )
        group = (base.name, method, labels[idx])
        summary_groups.setdefault(group, []).append(result)
        metric_of_group[group] = result.metric_name

    if rows:
        _emit_results(out_dir, rows, summary_groups, metric_of_group)
    for key, message in sorted(failures.items()):
        print(f"trial {key} aborted: {message}", file=sys.stderr)
    return 2 if failures else 0


def cmd_dualize(args) -> int:
    edges, stats = load_signed_edges(args.edges)
    if args.neg >= args.pos:
        return _fail("--neg must be below --pos")
    name = args.name or os.path.basename(os.path.normpath(args.out))
    dataset = dualize(edges, args.pos, args.neg, name=name)
    _guard_overwrite(os.path.join(args.out, "meta.json"), args.overwrite)
    save_dataset(dataset, args.out)
    labeled = int((dataset.labels >= 0).sum())
    print(
        f"{name}: {dataset.num_nodes} dual nodes, "
        f"{dataset.graph.num_undirected_edges} dual edges, {labeled} labeled "
        f"(merged {stats['merged_duplicates']} duplicate pairs, "
        f"dropped {stats['dropped_self_loops']} self loops)"
    )
    return 0


def cmd_export_hidden(args) -> int:
    path = resolve_dataset_path(args.dataset)
    dataset = load_dataset(
        path,
        split=None,
        normalize_features=not args.no_normalize,
        features=args.features,
    )
    params = model.load_checkpoint(args.checkpoint)
    a_hat = normalize_adjacency(dataset.graph)
    _guard_overwrite(args.out, args.overwrite)
    export_hidden(params, a_hat, dataset.features, dataset.labels, args.out)
    print(args.out)
    return 0


def _read_results(path: str):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = [dict(zip(header, row)) for row in reader]
    return header, rows


def cmd_report(args) -> int:
    header, rows = _read_results(args.results)
    has_cell = "cell" in header
    groups = {}
    for row in rows:
        key = (row["dataset"], row["method"]) + ((row["cell"],) if has_cell else ())
        key = key + (row["metric"],)
        groups.setdefault(key, []).append(float(row["value"]))
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "summary.csv")
    _guard_overwrite(out_path, args.overwrite)
    base_cols = ["dataset", "method"] + (["cell"] if has_cell else []) + ["metric"]
    out_rows = []
    for key in sorted(groups):
        values = groups[key]
        mean = float(np.mean(values))
        std = 0.0 if len(values) == 1 else float(np.std(values, ddof=1))
        out_rows.append(list(key) + [_fmt(mean), _fmt(std), len(values)])
    _write_csv(out_path, base_cols + ["mean", "std", "n_trials"], out_rows)
    print(out_path)

    if args.logs:
        curves = {}
        for fname in sorted(os.listdir(args.logs)):
            if not fname.endswith(".csv"):
                continue
            stem = fname[:-4]
            group = stem.rsplit("__seed", 1)[0]
            with open(os.path.join(args.logs, fname), encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                next(reader)
                for epoch, split, _metric, value in reader:
                    if split == "val":
                        curves.setdefault((group, int(epoch)), []).append(float(value))
        curve_path = os.path.join(args.out, "val_curves.csv")
        _guard_overwrite(curve_path, args.overwrite)
        curve_rows = [
            (group, epoch, _fmt(float(np.mean(vals))), len(vals))
            for (group, epoch), vals in sorted(curves.items())
        ]
        _write_csv(curve_path, ["group", "epoch", "mean_val", "n"], curve_rows)
        print(curve_path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphmix",
        description="Semi-supervised node and link classification with a "
        "mixup-regularized GCN/FCN pair",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="sample class-balanced random splits")
    p.add_argument("--dataset", required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--val", type=int, required=True)
    p.add_argument("--test", default="remaining", help='count or "remaining"')
    p.add_argument("--seeds", type=int, nargs="+", required=True)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="run all (split x method x seed) trials")
    p.add_argument("--manifest", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ablate", help="run a config grid over the manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("dualize", help="build the link-classification dual dataset")
    p.add_argument("--edges", required=True, help='signed edge CSV "src,dst,weight"')
    p.add_argument("--pos", type=float, required=True)
    p.add_argument("--neg", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--name", default=None)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_dualize)

    p = sub.add_parser("export-hidden", help="write eval-mode hidden states as CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--features", default="auto", choices=["auto", "dense", "sparse"])
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_export_hidden)

    p = sub.add_parser("report", help="summarize a results CSV (and optional logs)")
    p.add_argument("--results", required=True)
    p.add_argument("--logs", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--overwrite", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, DataFormatError, FileExistsError, FileNotFoundError) as e:
        return _fail(str(e))


if __name__ == "__main__":
    sys.exit(main())

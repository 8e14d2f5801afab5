"""Command-line pipeline: train, explain, compare, heatmap.

All four subcommands read the same JSON experiment config; flags override
individual fields. Outputs are deterministic: rerunning a command with
the same config and seed reproduces every file byte for byte. Failures
exit nonzero after printing a single line of the form
``error:<category>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import explainers as _explainers
from . import metrics as _metrics
from .data import load_csv, load_schema, standardize, train_test_split
from .errors import ConfigError, DataError, DisagreeError
from .harness import (
    ExperimentConfig,
    aggregate,
    default_k_grid,
    explain_instances,
    prepare,
    read_matrices_json,
    write_matrices_json,
    write_report_csv,
    PairwiseMatrix,
)
from .heatmap import write_heatmaps
from .models import accuracy, load_model, save_model
from .harness import instance_seed  # noqa: F401  (re-exported for scripts)

SEED_ENV_VAR = "DISAGREE_SEED"


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg = replace(cfg, master_seed=int(env_seed))
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from None
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if getattr(args, "methods", None):
        cfg = replace(cfg, methods=tuple(args.methods.split(",")))
    if getattr(args, "k", None):
        cfg = replace(cfg, k_values=tuple(int(v) for v in args.k.split(",")))
    if getattr(args, "limit", None) is not None:
        cfg = replace(cfg, instance_limit=args.limit)
    if getattr(args, "dataset", None):
        cfg = replace(cfg, dataset=args.dataset)
    if getattr(args, "schema", None):
        cfg = replace(cfg, schema=args.schema)
    if not cfg.dataset:
        raise ConfigError("config field 'dataset' is required")
    if not cfg.schema:
        raise ConfigError("config field 'schema' is required")
    return cfg


def cmd_train(args) -> int:
    cfg = _load_config(args)
    t0 = time.perf_counter()
    ds, train_std, test_std, std, model = prepare(cfg)
    train_s = time.perf_counter() - t0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model, standardizer=std, train_config=cfg.train)
    test_acc = accuracy(model, test_std)
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "n_rows": ds.n,
        "n_train": train_std.n,
        "n_test": test_std.n,
        "train_accuracy": accuracy(model, train_std),
        "test_accuracy": test_acc,
        "timings": {"train_s": train_s},
        "version": __version__,
    }
    manifest_path = out.with_suffix(".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"model written to {out}")
    print(f"test_accuracy {test_acc:.4f}")
    return 0


def cmd_explain(args) -> int:
    cfg = _load_config(args)
    saved = load_model(args.model)
    schema = load_schema(cfg.schema)
    ds = load_csv(cfg.dataset, schema)
    train_ds, test_ds = train_test_split(ds, cfg.test_fraction, cfg.split_seed)
    std = saved.standardizer
    if std is None:
        raise DataError("model file carries no standardizer; cannot standardize inputs")
    X_train = standardize(std, train_ds.X)
    X_test = standardize(std, test_ds.X)
    if cfg.instance_limit is not None:
        X_test = X_test[: cfg.instance_limit]
    sigma_default = _explainers.smoothgrad_sigma(X_train)
    all_attr = explain_instances(cfg, saved.model, X_test, sigma_default)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    d = schema.d
    header = "instance_index,target_class," + ",".join(f"v_{j}" for j in range(d))
    for method in dict.fromkeys(cfg.methods):
        lines = [header]
        for per_method in all_attr:
            a = per_method[method]
            vals = ",".join(repr(float(v)) for v in a.values)
            lines.append(f"{a.instance_index},{a.target_class},{vals}")
        path = out_dir / f"{method}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"wrote {path} ({len(all_attr)} instances)")
    return 0


def _read_attribution_csv(path: Path) -> tuple[list[int], list[int], np.ndarray]:
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        if header[:2] != ["instance_index", "target_class"] or len(header) < 3:
            raise DataError(f"{path}: expected attribution CSV header, found {header[:3]}...")
        idx, classes, rows = [], [], []
        for row in reader:
            idx.append(int(row[0]))
            classes.append(int(row[1]))
            rows.append([float(v) for v in row[2:]])
    if not rows:
        raise DataError(f"{path} has no attribution rows")
    return idx, classes, np.array(rows, dtype=float)


def _discover_attribution_files(spec: str) -> dict[str, Path]:
    p = Path(spec)
    if p.is_dir():
        files = sorted(p.glob("*.csv"))
    else:
        files = [Path(s) for s in spec.split(",")]
    out = {}
    for f in files:
        if not f.exists():
            raise DataError(f"attribution file not found: {f}")
        out[f.stem] = f
    if len(out) < 2:
        raise DataError(f"need at least 2 attribution files to compare, found {len(out)}")
    return out


def cmd_compare(args) -> int:
    files = _discover_attribution_files(args.attributions)
    methods = tuple(sorted(files))
    data = {}
    ref_idx = None
    d = None
    for m in methods:
        idx, classes, vals = _read_attribution_csv(files[m])
        if ref_idx is None:
            ref_idx, d = idx, vals.shape[1]
        elif idx != ref_idx:
            raise DataError(
                f"instance mismatch: {files[m]} rows differ from {files[methods[0]]}"
            )
        elif vals.shape[1] != d:
            raise DataError(f"{files[m]}: feature count {vals.shape[1]} != {d}")
        data[m] = vals
    metric_list = tuple(args.metrics.split(",")) if args.metrics else _metrics.METRIC_IDS
    for metric in metric_list:
        if metric not in _metrics.METRIC_IDS:
            raise ConfigError(
                f"unknown metric {metric!r}; valid ids: {', '.join(_metrics.METRIC_IDS)}"
            )
    k_values = (
        tuple(int(v) for v in args.k.split(",")) if args.k else default_k_grid(d)
    )
    for k in k_values:
        if not 1 <= k <= d:
            raise ConfigError(f"k={k} out of range for d={d}")
    subset = tuple(int(v) for v in args.subset.split(",")) if args.subset else None

    n = len(ref_idx)
    matrices = []
    for metric in metric_list:
        ks = k_values if metric in _metrics.TOP_K_METRICS else [None]
        for k in ks:
            mean = np.zeros((len(methods), len(methods)))
            stderr = np.zeros_like(mean)
            for i in range(len(methods)):
                for j in range(i, len(methods)):
                    vals = [
                        _metrics.compute_metric(
                            metric, data[methods[i]][r], data[methods[j]][r], k=k, subset=subset
                        )
                        for r in range(n)
                    ]
                    mu, se = aggregate(vals)
                    mean[i, j] = mean[j, i] = mu
                    stderr[i, j] = stderr[j, i] = se
            matrices.append(
                PairwiseMatrix(metric=metric, k=k, methods=methods, mean=mean, stderr=stderr, n=n)
            )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_report_csv(matrices, out_dir / "report.csv")
    write_matrices_json(matrices, out_dir / "matrices.json")
    print(f"wrote {out_dir / 'report.csv'} and {out_dir / 'matrices.json'} ({len(matrices)} matrices)")
    return 0


def cmd_heatmap(args) -> int:
    matrices = read_matrices_json(args.matrices)
    written = write_heatmaps([m.to_dict() for m in matrices], args.out)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="disagree",
        description="Train small tabular classifiers, explain them six ways, "
        "and quantify pairwise explanation disagreement.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from an experiment config")
    p_train.add_argument("--config", required=True, help="experiment config JSON")
    p_train.add_argument("--out", required=True, help="output model JSON path")
    p_train.add_argument("--seed", type=int, help="override master seed")
    p_train.add_argument("--dataset", help="override dataset CSV path")
    p_train.add_argument("--schema", help="override schema JSON path")
    p_train.set_defaults(func=cmd_train)

    p_explain = sub.add_parser("explain", help="explain the test split with each method")
    p_explain.add_argument("--config", required=True)
    p_explain.add_argument("--model", required=True, help="model JSON from 'train'")
    p_explain.add_argument("--out", required=True, help="output directory for attribution CSVs")
    p_explain.add_argument("--methods", help="comma-separated method ids (default: config)")
    p_explain.add_argument("--limit", type=int, help="explain at most this many test instances")
    p_explain.add_argument("--seed", type=int, help="override master seed")
    p_explain.add_argument("--dataset", help="override dataset CSV path")
    p_explain.add_argument("--schema", help="override schema JSON path")
    p_explain.set_defaults(func=cmd_explain)

    p_compare = sub.add_parser("compare", help="pairwise metrics from attribution CSVs")
    p_compare.add_argument(
        "--attributions", required=True,
        help="directory of per-method CSVs, or comma-separated file list",
    )
    p_compare.add_argument("--out", required=True, help="output directory")
    p_compare.add_argument("--metrics", help="comma-separated metric ids (default: all six)")
    p_compare.add_argument("--k", help="comma-separated k values (default: 25/50/75/100%% of d)")
    p_compare.add_argument("--subset", help="feature indices for the whole-set metrics")
    p_compare.set_defaults(func=cmd_compare)

    p_heatmap = sub.add_parser("heatmap", help="render SVG heatmaps from matrices.json")
    p_heatmap.add_argument("--matrices", required=True, help="matrices.json from 'compare'")
    p_heatmap.add_argument("--out", required=True, help="output directory for SVG files")
    p_heatmap.set_defaults(func=cmd_heatmap)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DisagreeError as e:
        print(f"error:{e.category}: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error:io: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

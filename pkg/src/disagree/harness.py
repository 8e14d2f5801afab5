"""End-to-end experiments: train, explain, compare, aggregate.

A run is described by one declarative config: dataset and split, model,
explainer set, metric list, and k values. The test split is explained
instance by instance with every configured method, each (pair, metric, k)
combination is evaluated per instance, and the per-instance values are
aggregated into mean +/- standard-error matrices.

Reproducibility contract: the per-instance seed for a stochastic
explainer is an 8-byte blake2b digest of "master_seed:instance_index:
method_id", so results are independent of evaluation order and identical
across runs, serial or parallel.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace, fields
from pathlib import Path

import numpy as np

from . import metrics as _metrics
from . import explainers as _explainers
from .data import load_csv, load_schema, train_test_split, fit_standardizer, standardize
from .errors import ConfigError, MetricError
from .models import TrainConfig, accuracy, predict_label, train_logistic, train_mlp

__all__ = [
    "ExperimentConfig",
    "PairwiseMatrix",
    "InstanceRecord",
    "ExperimentResult",
    "instance_seed",
    "aggregate",
    "run_experiment",
    "sweep_k",
    "dichotomy_report",
    "PairAgreement",
    "default_k_grid",
    "write_matrices_json",
    "read_matrices_json",
    "write_report_csv",
    "write_records_csv",
]

MODEL_KINDS = ("logistic", "mlp")


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment."""

    dataset: str = ""
    schema: str = ""
    test_fraction: float = 0.3
    split_seed: int = 0
    model_kind: str = "mlp"
    hidden: tuple[int, ...] = (50, 100, 100, 50)
    train: TrainConfig = field(default_factory=TrainConfig)
    methods: tuple[str, ...] = _explainers.METHOD_IDS
    explainer_overrides: dict = field(default_factory=dict)
    metrics: tuple[str, ...] = _metrics.METRIC_IDS
    k_values: tuple[int, ...] | None = None  # None -> 25/50/75/100% of d, rounded up
    feature_subset: tuple[int, ...] | None = None
    instance_limit: int | None = None
    master_seed: int = 0
    gradient_target: str = "logit"

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "metrics", tuple(self.metrics))
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.k_values is not None:
            object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        if self.feature_subset is not None:
            object.__setattr__(self, "feature_subset", tuple(int(i) for i in self.feature_subset))
        if len(self.methods) < 2:
            raise ConfigError("need at least 2 explainers to compare")
        for m in self.methods:
            if m not in _explainers.METHOD_IDS:
                raise ConfigError(
                    f"unknown explainer {m!r}; valid ids: {', '.join(_explainers.METHOD_IDS)}"
                )
        for m in self.metrics:
            if m not in _metrics.METRIC_IDS:
                raise ConfigError(
                    f"unknown metric {m!r}; valid ids: {', '.join(_metrics.METRIC_IDS)}"
                )
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"model_kind must be one of {MODEL_KINDS}, got {self.model_kind!r}")
        if self.instance_limit is not None and self.instance_limit < 1:
            raise ConfigError(f"instance_limit must be >= 1, got {self.instance_limit}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "train" in doc and isinstance(doc["train"], dict):
            doc["train"] = TrainConfig(**doc["train"])
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = {
            "dataset": self.dataset,
            "schema": self.schema,
            "test_fraction": self.test_fraction,
            "split_seed": self.split_seed,
            "model_kind": self.model_kind,
            "hidden": list(self.hidden),
            "train": {
                "learning_rate": self.train.learning_rate,
                "epochs": self.train.epochs,
                "batch_size": self.train.batch_size,
                "l2_penalty": self.train.l2_penalty,
                "seed": self.train.seed,
            },
            "methods": list(self.methods),
            "explainer_overrides": self.explainer_overrides,
            "metrics": list(self.metrics),
            "k_values": None if self.k_values is None else list(self.k_values),
            "feature_subset": None if self.feature_subset is None else list(self.feature_subset),
            "instance_limit": self.instance_limit,
            "master_seed": self.master_seed,
            "gradient_target": self.gradient_target,
        }
        return doc

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class PairwiseMatrix:
    """methods x methods grid of one metric's mean and standard error."""

    metric: str
    k: int | None  # None for whole-subset metrics
    methods: tuple[str, ...]
    mean: np.ndarray
    stderr: np.ndarray
    n: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "k": "all" if self.k is None else int(self.k),
            "methods": list(self.methods),
            "mean": [[float(v) for v in row] for row in self.mean],
            "stderr": [[float(v) for v in row] for row in self.stderr],
            "n": int(self.n),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PairwiseMatrix":
        k = doc["k"]
        return cls(
            metric=doc["metric"],
            k=None if k == "all" else int(k),
            methods=tuple(doc["methods"]),
            mean=np.array(doc["mean"], dtype=float),
            stderr=np.array(doc["stderr"], dtype=float),
            n=int(doc["n"]),
        )


@dataclass
class InstanceRecord:
    """One explained instance: its attributions and all pair metric values."""

    instance_index: int
    target_class: int
    attributions: dict  # method id -> np.ndarray
    values: dict  # (metric, k or None, method_a, method_b) -> float


@dataclass
class ExperimentResult:
    matrices: list[PairwiseMatrix]
    records: list[InstanceRecord]
    manifest: dict

    def matrix(self, metric: str, k: int | None = None) -> PairwiseMatrix:
        for m in self.matrices:
            if m.metric == metric and m.k == k:
                return m
        raise MetricError(f"no matrix for metric={metric!r}, k={k}")


def instance_seed(master_seed: int, instance_index: int, method: str) -> int:
    """Stable per-(instance, method) seed derived from the master seed."""
    key = f"{master_seed}:{instance_index}:{method}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def aggregate(values) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(n); 0 when n == 1)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise MetricError("cannot aggregate an empty list")
    mean = float(values.mean())
    if values.size == 1:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / math.sqrt(values.size))


def default_k_grid(d: int) -> tuple[int, ...]:
    """k at 25/50/75/100% of the feature count, rounded up, deduplicated."""
    ks = sorted({max(1, math.ceil(d * f)) for f in (0.25, 0.5, 0.75, 1.0)})
    return tuple(ks)


def _resolve_explainer_config(cfg: ExperimentConfig, method: str, sigma_default: float, d: int):
    overrides = dict(cfg.explainer_overrides.get(method, {}))
    if method in (_explainers.GRADIENT, _explainers.GRAD_TIMES_INPUT):
        overrides.setdefault("target", cfg.gradient_target)
    elif method == _explainers.INTEGRATED_GRADIENTS:
        overrides.setdefault("target", cfg.gradient_target)
        if overrides.get("baseline") is not None:
            overrides["baseline"] = np.asarray(overrides["baseline"], dtype=float)
    elif method == _explainers.SMOOTH_GRAD:
        overrides.setdefault("target", cfg.gradient_target)
        overrides.setdefault("sigma", sigma_default)
    elif method == _explainers.KERNEL_SHAP:
        if overrides.get("baseline") is not None:
            overrides["baseline"] = np.asarray(overrides["baseline"], dtype=float)
    return _explainers.make_config(method, **overrides)


def _seeded(config, seed: int):
    return replace(config, seed=seed) if hasattr(config, "seed") else config


def prepare(cfg: ExperimentConfig, dataset=None):
    """Load, split, standardize, and train; shared by the harness and CLI."""
    ds = dataset if dataset is not None else load_csv(cfg.dataset, load_schema(cfg.schema))
    train_ds, test_ds = train_test_split(ds, cfg.test_fraction, cfg.split_seed)
    std = fit_standardizer(train_ds)
    train_std = train_ds.with_X(standardize(std, train_ds.X))
    test_std = test_ds.with_X(standardize(std, test_ds.X))
    if cfg.model_kind == "logistic":
        model = train_logistic(train_std, cfg.train)
    else:
        model = train_mlp(train_std, list(cfg.hidden), cfg.train)
    return ds, train_std, test_std, std, model


def explain_instances(cfg: ExperimentConfig, model, X_std: np.ndarray, sigma_default: float):
    """Attributions for each row of X_std with per-instance derived seeds.

    Returns a list (one entry per instance) of dicts keyed by method id;
    duplicate method ids in the config share the same attribution.
    """
    d = X_std.shape[1]
    unique_methods = list(dict.fromkeys(cfg.methods))
    base_configs = {
        m: _resolve_explainer_config(cfg, m, sigma_default, d) for m in unique_methods
    }
    out = []
    for i in range(X_std.shape[0]):
        x = X_std[i]
        per_method = {}
        for m in unique_methods:
            config = _seeded(base_configs[m], instance_seed(cfg.master_seed, i, m))
            per_method[m] = _explainers.explain(m, model, x, config, instance_index=i)
        out.append(per_method)
    return out


def _pair_values(
    attributions: dict, metric_list, k_values, subset
) -> dict:
    """All (metric, k, method_a, method_b) values for one instance."""
    values = {}
    ids = sorted(attributions)
    for pos_a, ma in enumerate(ids):
        for mb in ids[pos_a:]:
            ea, eb = attributions[ma].values, attributions[mb].values
            for metric in metric_list:
                if metric in _metrics.TOP_K_METRICS:
                    for k in k_values:
                        values[(metric, k, ma, mb)] = _metrics.compute_metric(metric, ea, eb, k=k)
                else:
                    values[(metric, None, ma, mb)] = _metrics.compute_metric(
                        metric, ea, eb, subset=subset
                    )
    return values


def _lookup(rec_values: dict, metric: str, k, ma: str, mb: str) -> float:
    key = (metric, k, *sorted((ma, mb)))
    return rec_values[key]


def _assemble_matrices(cfg, records, k_values) -> list[PairwiseMatrix]:
    matrices = []
    methods = cfg.methods
    m = len(methods)
    n = len(records)
    for metric in cfg.metrics:
        ks = k_values if metric in _metrics.TOP_K_METRICS else [None]
        for k in ks:
            mean = np.zeros((m, m))
            stderr = np.zeros((m, m))
            for i in range(m):
                for j in range(i, m):
                    vals = [_lookup(r.values, metric, k, methods[i], methods[j]) for r in records]
                    mu, se = aggregate(vals)
                    mean[i, j] = mean[j, i] = mu
                    stderr[i, j] = stderr[j, i] = se
            matrices.append(
                PairwiseMatrix(metric=metric, k=k, methods=methods, mean=mean, stderr=stderr, n=n)
            )
    return matrices


def run_experiment(cfg: ExperimentConfig, dataset=None) -> ExperimentResult:
    """Train, explain the test split, and aggregate pairwise metrics.

    ``dataset`` bypasses file loading when a Dataset is already in hand.
    """
    t_start = time.perf_counter()
    ds, train_std, test_std, std, model = prepare(cfg, dataset)
    t_trained = time.perf_counter()

    d = ds.d
    k_values = cfg.k_values if cfg.k_values is not None else default_k_grid(d)
    for k in k_values:
        if not 1 <= k <= d:
            raise ConfigError(f"k={k} out of range for d={d}")
    subset = cfg.feature_subset
    if subset is not None and (min(subset) < 0 or max(subset) >= d):
        raise ConfigError(f"feature_subset out of range for d={d}")

    X = test_std.X if cfg.instance_limit is None else test_std.X[: cfg.instance_limit]
    sigma_default = _explainers.smoothgrad_sigma(train_std.X)
    all_attr = explain_instances(cfg, model, X, sigma_default)
    t_explained = time.perf_counter()

    records = []
    for i, per_method in enumerate(all_attr):
        label = int(next(iter(per_method.values())).target_class)
        records.append(
            InstanceRecord(
                instance_index=i,
                target_class=label,
                attributions={m: a.values for m, a in per_method.items()},
                values=_pair_values(per_method, cfg.metrics, k_values, subset),
            )
        )
    matrices = _assemble_matrices(cfg, records, k_values)
    t_end = time.perf_counter()

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "n_rows": ds.n,
        "n_train": train_std.n,
        "n_test": test_std.n,
        "n_explained": len(records),
        "d": d,
        "k_values": list(k_values),
        "train_accuracy": accuracy(model, train_std),
        "test_accuracy": accuracy(model, test_std),
        "timings": {
            "train_s": t_trained - t_start,
            "explain_s": t_explained - t_trained,
            "metrics_s": t_end - t_explained,
            "total_s": t_end - t_start,
        },
    }
    return ExperimentResult(matrices=matrices, records=records, manifest=manifest)


def sweep_k(cfg: ExperimentConfig, k_values, dataset=None) -> list[PairwiseMatrix]:
    """One matrix per (metric, k); attributions are computed once and reused."""
    result = run_experiment(replace(cfg, k_values=tuple(int(k) for k in k_values)), dataset)
    return result.matrices


@dataclass(frozen=True)
class PairAgreement:
    method_a: str
    method_b: str
    mean: float
    gradient_pair: bool
    strong: bool


def dichotomy_report(matrices, threshold: float = 0.5) -> list[PairAgreement]:
    """Method pairs ordered by mean rank correlation over all features.

    Pairs of gradient-based methods are marked so the agreement split
    among them (e.g. gradient vs. SmoothGrad against gradient vs.
    integrated gradients) is easy to read off. ``strong`` flags pairs at
    or above the threshold.
    """
    target = None
    for m in matrices:
        if m.metric == "rank_correlation" and m.k is None:
            target = m
            break
    if target is None:
        raise MetricError("dichotomy report needs a rank_correlation matrix over all features")
    entries = []
    for i in range(len(target.methods)):
        for j in range(i + 1, len(target.methods)):
            a, b = target.methods[i], target.methods[j]
            entries.append(
                PairAgreement(
                    method_a=min(a, b),
                    method_b=max(a, b),
                    mean=float(target.mean[i, j]),
                    gradient_pair=a in _explainers.GRADIENT_METHODS
                    and b in _explainers.GRADIENT_METHODS,
                    strong=float(target.mean[i, j]) >= threshold,
                )
            )
    entries.sort(key=lambda e: (-e.mean, e.method_a, e.method_b))
    return entries


def write_matrices_json(matrices, path: str | Path) -> None:
    doc = [m.to_dict() for m in matrices]
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_matrices_json(path: str | Path) -> list[PairwiseMatrix]:
    path = Path(path)
    if not path.exists():
        raise MetricError(f"matrices file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise MetricError(f"matrices file {path} is not valid JSON: {e}") from e
    if not isinstance(doc, list):
        raise MetricError(f"matrices file {path} must hold a JSON array")
    return [PairwiseMatrix.from_dict(entry) for entry in doc]


def _k_sort_key(k):
    return (1, 0) if k is None else (0, int(k))


def write_report_csv(matrices, path: str | Path) -> None:
    """One row per (pair, metric, k), sorted by (metric, k, pair)."""
    rows = []
    for m in matrices:
        seen = set()
        for i in range(len(m.methods)):
            for j in range(len(m.methods)):
                a, b = m.methods[i], m.methods[j]
                if a >= b or (a, b) in seen:
                    continue
                seen.add((a, b))
                rows.append(
                    (m.metric, _k_sort_key(m.k), a, b,
                     "all" if m.k is None else str(m.k),
                     m.mean[i, j], m.stderr[i, j], m.n)
                )
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    lines = ["method_a,method_b,metric,k,mean,stderr,n"]
    for metric, _, a, b, k_str, mean, stderr, n in rows:
        lines.append(f"{a},{b},{metric},{k_str},{mean!r},{stderr!r},{n}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_records_csv(records, path: str | Path) -> None:
    """Per-instance metric values, one row per (instance, metric, k, pair)."""
    lines = ["instance_index,metric,k,method_a,method_b,value"]
    for rec in records:
        for (metric, k, a, b) in sorted(rec.values, key=lambda t: (t[0], _k_sort_key(t[1]), t[2], t[3])):
            if a == b:
                continue
            k_str = "all" if k is None else str(k)
            lines.append(f"{rec.instance_index},{metric},{k_str},{a},{b},{rec.values[(metric, k, a, b)]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

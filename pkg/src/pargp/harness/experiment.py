"""Experiment configurations, the runner, and sweep/report helpers.

A run executes the configured algorithm over a number of seeded random
instances (fresh synthetic draw and fresh partition per instance), times the
phases, runs the centralized counterpart of a parallel algorithm for the
speedup ratio, runs the exact GP as a quality reference when the size
permits, and writes one results row per instance plus the full per-phase
message log. Numeric output carries 17 significant digits so reruns are
byte-comparable; wall-clock columns are the only nondeterministic ones.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, fields, replace
from itertools import product
from pathlib import Path

import numpy as np

from ..centralized import BlockStructure, pic_predict, pitc_predict
from ..errors import NonPositiveVariance
from ..fullgp import fgp_predict
from ..icf import icf_factorize, icf_predict
from ..kernel import Dataset, Hyperparameters
from ..parallel import Engine, MessageLog, partition_clustered, partition_random
from ..support import select_support
from .io import load_dataset
from .metrics import MetricsReport, mnlp, rmse
from .synthetic import generate_synthetic

ALGORITHMS = ("fgp", "pitc", "pic", "icf", "ppitc", "ppic", "picf")
SUPPORT_ALGOS = ("pitc", "pic", "ppitc", "ppic")
FACTOR_ALGOS = ("icf", "picf")
PARALLEL_ALGOS = ("ppitc", "ppic", "picf")
COUNTERPART = {"ppitc": "pitc", "ppic": "pic", "picf": "icf"}

TIMING_COLUMNS = (
    "wall_partition", "wall_factorize", "wall_local_summary", "wall_global_summary",
    "wall_prediction", "wall_cross_block", "wall_parallel_total", "wall_centralized",
    "wall_fgp", "speedup",
)

RESULT_COLUMNS = (
    "config_id", "algorithm", "workers", "support_size", "rank", "partition",
    "partition_u", "seed", "instances", "n_train", "n_test", "dim",
    "signal_variance", "noise_variance", "length_scales", "source",
    "instance", "instance_seed",
    "rmse", "rmse_vs_fgp", "mnlp", "negative_variance_count", "psd_valid",
) + TIMING_COLUMNS


@dataclass
class ExperimentConfig:
    algorithm: str
    workers: int = 1
    support_size: int | None = None
    rank: int | None = None
    partition: str = "random"
    partition_u: bool = False
    seed: int = 0
    instances: int = 5
    n_train: int = 256
    n_test: int = 64
    dim: int = 2
    signal_variance: float = 1.0
    noise_variance: float = 0.1
    length_scales: tuple | None = None
    train_file: str | None = None
    test_file: str | None = None
    out_dir: str = "."
    fgp_reference_max: int = 4096
    threads: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; pick one of {ALGORITHMS}")
        if self.partition not in ("random", "clustered"):
            raise ValueError("partition must be 'random' or 'clustered'")
        if self.algorithm in SUPPORT_ALGOS:
            if not self.support_size:
                raise ValueError(f"{self.algorithm} needs support_size")
            if self.rank:
                raise ValueError(f"rank is only meaningful for {FACTOR_ALGOS}")
        elif self.algorithm in FACTOR_ALGOS:
            if not self.rank:
                raise ValueError(f"{self.algorithm} needs rank")
            if self.support_size:
                raise ValueError(f"support_size is only meaningful for {SUPPORT_ALGOS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")

    @property
    def hyperparameters(self) -> Hyperparameters:
        ell = self.length_scales if self.length_scales is not None else (0.3,) * self.dim
        return Hyperparameters(self.signal_variance, self.noise_variance, np.asarray(ell))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        kwargs = {}
        casts = {f.name: f.type for f in fields(cls)}
        for key, raw in mapping.items():
            if key not in casts:
                raise ValueError(f"unknown config key {key!r}")
            if key in ("algorithm", "partition", "train_file", "test_file", "out_dir"):
                kwargs[key] = raw
            elif key in ("partition_u", "threads"):
                kwargs[key] = str(raw).strip().lower() in ("1", "true", "yes", "on")
            elif key == "length_scales":
                kwargs[key] = tuple(float(v) for v in str(raw).split(","))
            elif key in ("signal_variance", "noise_variance"):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = int(raw)
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        from ..configio import read_keyvalues

        mapping = read_keyvalues(path)
        if overrides:
            mapping.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(mapping)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _instance_data(cfg: ExperimentConfig, instance_seed: int):
    if cfg.train_file:
        train = load_dataset(cfg.train_file)
        test = load_dataset(cfg.test_file) if cfg.test_file else None
        if test is None:
            raise ValueError("a test_file is required when train_file is given")
        return train, test
    return generate_synthetic(
        cfg.n_train, cfg.n_test, cfg.dim, cfg.hyperparameters, instance_seed
    )


def _run_instance(cfg: ExperimentConfig, instance: int, config_id: int):
    h = cfg.hyperparameters
    instance_seed = cfg.seed + instance
    train, test = _instance_data(cfg, instance_seed)
    log = MessageLog()
    row = {
        "config_id": config_id,
        "algorithm": cfg.algorithm,
        "workers": cfg.workers,
        "support_size": cfg.support_size,
        "rank": cfg.rank,
        "partition": cfg.partition,
        "partition_u": cfg.partition_u,
        "seed": cfg.seed,
        "instances": cfg.instances,
        "n_train": len(train),
        "n_test": len(test),
        "dim": train.dim,
        "signal_variance": h.signal_variance,
        "noise_variance": h.noise_variance,
        "length_scales": ";".join(f"{v:.17g}" for v in h.length_scales),
        "source": "files" if cfg.train_file else "synthetic",
        "instance": instance,
        "instance_seed": instance_seed,
    }

    support = None
    if cfg.algorithm in SUPPORT_ALGOS:
        support = select_support(train, cfg.support_size, h)

    assignments = None
    wall_partition = 0.0
    if cfg.algorithm in PARALLEL_ALGOS or cfg.algorithm in ("pitc", "pic"):
        split = partition_random if cfg.partition == "random" else partition_clustered
        t0 = time.perf_counter()
        assignments = split(train, test, cfg.workers, instance_seed, log=log)
        wall_partition = time.perf_counter() - t0

    pred = None
    pred_centralized = None
    wall_centralized = None
    phase_seconds: dict[str, float] = {}

    if cfg.algorithm in PARALLEL_ALGOS:
        engine = Engine(train, test, assignments, h, log=log, threads=cfg.threads)
        if cfg.algorithm == "ppitc":
            pred = engine.run_ppitc(support)
        elif cfg.algorithm == "ppic":
            pred = engine.run_ppic(support)
        else:
            pred = engine.run_picf(cfg.rank, partition_u=cfg.partition_u)
        phase_seconds = dict(engine.phase_seconds)
        t0 = time.perf_counter()
        if cfg.algorithm == "ppitc":
            pred_centralized = pitc_predict(
                train, test, support, BlockStructure.from_assignments(assignments), h
            )
        elif cfg.algorithm == "ppic":
            pred_centralized = pic_predict(
                train, test, support, BlockStructure.from_assignments(assignments), h
            )
        else:
            factor = icf_factorize(train, h, cfg.rank)
            pred_centralized = icf_predict(train, test, factor, h)
        wall_centralized = time.perf_counter() - t0
    else:
        t0 = time.perf_counter()
        if cfg.algorithm == "fgp":
            pred = fgp_predict(train, test, h)
        elif cfg.algorithm == "pitc":
            pred = pitc_predict(
                train, test, support, BlockStructure.from_assignments(assignments), h
            )
        elif cfg.algorithm == "pic":
            pred = pic_predict(
                train, test, support, BlockStructure.from_assignments(assignments), h
            )
        else:
            factor = icf_factorize(train, h, cfg.rank)
            pred = icf_predict(train, test, factor, h)
        wall_centralized = time.perf_counter() - t0

    wall_fgp = None
    rmse_vs_fgp = None
    if cfg.algorithm == "fgp":
        rmse_vs_fgp = 0.0
    elif len(train) <= cfg.fgp_reference_max:
        t0 = time.perf_counter()
        reference = fgp_predict(train, test, h)
        wall_fgp = time.perf_counter() - t0
        rmse_vs_fgp = float(np.sqrt(np.mean((pred.mean - reference.mean) ** 2)))

    the_rmse = rmse(pred, test.outputs) if test.outputs is not None else None
    neg_count = int(np.sum(pred.variance <= 0.0))
    the_mnlp = None
    if test.outputs is not None:
        try:
            the_mnlp = mnlp(pred, test.outputs)
        except NonPositiveVariance as exc:
            neg_count = exc.count

    wall_parallel = sum(phase_seconds.values()) if phase_seconds else None
    speedup = None
    if cfg.algorithm in PARALLEL_ALGOS and wall_parallel and wall_centralized:
        speedup = wall_centralized / wall_parallel

    row.update(
        {
            "rmse": the_rmse,
            "rmse_vs_fgp": rmse_vs_fgp,
            "mnlp": the_mnlp,
            "negative_variance_count": neg_count,
            "psd_valid": pred.psd_valid,
            "wall_partition": wall_partition,
            "wall_factorize": phase_seconds.get("factorize"),
            "wall_local_summary": phase_seconds.get("local_summary"),
            "wall_global_summary": phase_seconds.get("global_summary"),
            "wall_prediction": phase_seconds.get("prediction"),
            "wall_cross_block": phase_seconds.get("cross_block"),
            "wall_parallel_total": wall_parallel,
            "wall_centralized": wall_centralized,
            "wall_fgp": wall_fgp,
            "speedup": speedup,
        }
    )
    return row, log, pred_centralized, pred


def run_experiment(cfg: ExperimentConfig, config_id: int = 0,
                   append: bool = False) -> MetricsReport:
    """Run all instances of one configuration; write results and message CSVs."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    messages_path = out_dir / "messages.csv"
    mode = "a" if append else "w"
    rows = []
    with open(results_path, mode, newline="") as rf, open(messages_path, mode, newline="") as mf:
        res_writer = csv.writer(rf)
        msg_writer = csv.writer(mf)
        if not append:
            res_writer.writerow(RESULT_COLUMNS)
            msg_writer.writerow(
                ["config_id", "instance", "phase", "sender", "receiver", "tag",
                 "scalar_count", "bytes"]
            )
        for instance in range(cfg.instances):
            row, log, _, _ = _run_instance(cfg, instance, config_id)
            rows.append(row)
            res_writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
            for rec in log.records:
                msg_writer.writerow(
                    [config_id, instance, rec.phase, rec.sender, rec.receiver,
                     rec.tag, rec.scalar_count, rec.payload_bytes]
                )

    def _mean(key):
        vals = [r[key] for r in rows if r[key] is not None]
        return float(np.mean(vals)) if vals else None

    walls = {}
    for col in TIMING_COLUMNS[:-1]:
        value = _mean(col)
        if value is not None:
            walls[col.removeprefix("wall_")] = value
    return MetricsReport(
        rmse=_mean("rmse"),
        mnlp=_mean("mnlp"),
        wall_seconds=walls,
        speedup=_mean("speedup"),
        negative_variance_count=int(sum(r["negative_variance_count"] for r in rows)),
        rmse_vs_reference=_mean("rmse_vs_fgp"),
    )


def run_sweep(base: ExperimentConfig, grid: dict) -> list:
    """Cartesian sweep over config fields; results accumulate in one CSV pair."""
    for key in grid:
        if key not in {f.name for f in fields(ExperimentConfig)}:
            raise ValueError(f"unknown sweep field {key!r}")
    names = sorted(grid)
    reports = []
    first = True
    for config_id, combo in enumerate(product(*(grid[k] for k in names))):
        cfg = replace(base, **dict(zip(names, combo)))
        report = run_experiment(cfg, config_id=config_id, append=not first)
        reports.append((cfg, report))
        first = False
    return reports


def summarize_results(paths, out_path=None):
    """Aggregate results CSVs: mean/std of the metrics per configuration group."""
    group_cols = RESULT_COLUMNS[: RESULT_COLUMNS.index("instance")]
    metric_cols = ("rmse", "rmse_vs_fgp", "mnlp", "speedup")
    groups: dict[tuple, dict[str, list]] = {}
    for path in paths:
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                key = tuple(row[c] for c in group_cols)
                bucket = groups.setdefault(key, {c: [] for c in metric_cols})
                for c in metric_cols:
                    if row.get(c):
                        bucket[c].append(float(row[c]))
    header = list(group_cols)
    for c in metric_cols:
        header += [f"{c}_mean", f"{c}_std", f"{c}_n"]
    out_rows = [header]
    for key in sorted(groups):
        row = list(key)
        for c in metric_cols:
            vals = groups[key][c]
            if vals:
                row += [f"{np.mean(vals):.17g}", f"{np.std(vals):.17g}", len(vals)]
            else:
                row += ["", "", 0]
        out_rows.append(row)
    if out_path is not None:
        with open(out_path, "w", newline="") as fh:
            csv.writer(fh).writerows(out_rows)
    return out_rows

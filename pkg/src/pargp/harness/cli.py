"""Command-line interface.

Subcommands: generate synthetic data, select a support set, run one
experiment, sweep a grid of configurations, and aggregate result CSVs.
Any conditioning failure exits nonzero.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from ..errors import GPError
from ..kernel import Hyperparameters
from ..support import SupportSet, select_support
from .experiment import ExperimentConfig, run_experiment, run_sweep, summarize_results
from .io import load_dataset, save_dataset
from .synthetic import generate_synthetic


def _add_hyper_flags(parser):
    parser.add_argument("--signal-variance", type=float, default=1.0)
    parser.add_argument("--noise-variance", type=float, default=0.1)
    parser.add_argument("--length-scales", type=str, default=None,
                        help="comma list, e.g. 0.3,0.3")
    parser.add_argument("--hyperparams", type=str, default=None,
                        help="key=value file overriding the flags above")


def _hyperparameters(args, dim):
    if args.hyperparams:
        return Hyperparameters.from_file(args.hyperparams)
    if args.length_scales:
        ell = np.array([float(v) for v in args.length_scales.split(",")])
    else:
        ell = np.full(dim, 0.3)
    return Hyperparameters(args.signal_variance, args.noise_variance, ell)


def _cmd_generate(args) -> int:
    h = _hyperparameters(args, args.dim)
    train, test = generate_synthetic(args.n_train, args.n_test, h.dim, h, args.seed)
    save_dataset(args.out_train, train)
    save_dataset(args.out_test, test, include_outputs=not args.strip_test_outputs)
    print(f"wrote {args.out_train} ({len(train)} rows) and {args.out_test} ({len(test)} rows)")
    return 0


def _cmd_select_support(args) -> int:
    train = load_dataset(args.train)
    h = _hyperparameters(args, train.dim)
    support = select_support(train, args.size, h)
    support.to_csv(args.out)
    print(f"wrote {args.out} ({support.size} support points)")
    return 0


def _config_overrides(args) -> dict:
    keys = (
        "algorithm", "workers", "support_size", "rank", "partition", "partition_u",
        "seed", "instances", "n_train", "n_test", "dim", "signal_variance",
        "noise_variance", "length_scales", "train_file", "test_file", "out_dir",
        "threads",
    )
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _load_config(args) -> ExperimentConfig:
    overrides = _config_overrides(args)
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    if "algorithm" not in overrides:
        raise ValueError("either --config or --algorithm is required")
    return ExperimentConfig.from_mapping(overrides)


def _add_config_flags(parser):
    parser.add_argument("--config", type=str, default=None, help="key=value config file")
    parser.add_argument("--algorithm", type=str, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--support-size", dest="support_size", type=int, default=None)
    parser.add_argument("--rank", type=int, default=None)
    parser.add_argument("--partition", type=str, default=None,
                        choices=("random", "clustered"))
    parser.add_argument("--partition-u", dest="partition_u", action="store_const",
                        const="true", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--instances", type=int, default=None)
    parser.add_argument("--n-train", dest="n_train", type=int, default=None)
    parser.add_argument("--n-test", dest="n_test", type=int, default=None)
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--signal-variance", dest="signal_variance", type=float, default=None)
    parser.add_argument("--noise-variance", dest="noise_variance", type=float, default=None)
    parser.add_argument("--length-scales", dest="length_scales", type=str, default=None)
    parser.add_argument("--train-file", dest="train_file", type=str, default=None)
    parser.add_argument("--test-file", dest="test_file", type=str, default=None)
    parser.add_argument("--out-dir", dest="out_dir", type=str, default=None)
    parser.add_argument("--threads", action="store_const", const="true", default=None)


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_experiment(cfg)
    print(f"algorithm={cfg.algorithm} workers={cfg.workers} instances={cfg.instances}")
    print(f"rmse={report.rmse}")
    if report.rmse_vs_reference is not None:
        print(f"rmse_vs_fgp={report.rmse_vs_reference}")
    print(f"mnlp={report.mnlp}")
    if report.negative_variance_count:
        print(f"negative_variances={report.negative_variance_count}")
    if report.speedup is not None:
        print(f"speedup={report.speedup:.3f}")
    print(f"results in {cfg.out_dir}/results.csv")
    return 0


def _parse_int_list(text):
    return [int(v) for v in text.split(",")]


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    grid = {}
    if args.support_sizes:
        grid["support_size"] = _parse_int_list(args.support_sizes)
    if args.ranks:
        grid["rank"] = _parse_int_list(args.ranks)
    if args.workers_list:
        grid["workers"] = _parse_int_list(args.workers_list)
    if args.seeds:
        grid["seed"] = _parse_int_list(args.seeds)
    if not grid:
        raise ValueError("sweep needs at least one of --support-sizes/--ranks/--workers-list/--seeds")
    reports = run_sweep(cfg, grid)
    for swept_cfg, report in reports:
        label = (f"S={swept_cfg.support_size}" if swept_cfg.support_size
                 else f"R={swept_cfg.rank}")
        print(f"{swept_cfg.algorithm} M={swept_cfg.workers} {label} "
              f"seed={swept_cfg.seed}: rmse={report.rmse} mnlp={report.mnlp}")
    print(f"results in {cfg.out_dir}/results.csv")
    return 0


def _cmd_report(args) -> int:
    rows = summarize_results(args.inputs, out_path=args.out)
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for row in rows:
        print("  ".join(str(v).ljust(w) for v, w in zip(row, widths)))
    if args.out:
        print(f"summary in {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pargp", description="Parallel GP regression experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic dataset from the GP prior")
    p.add_argument("--n-train", dest="n_train", type=int, required=True)
    p.add_argument("--n-test", dest="n_test", type=int, required=True)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.add_argument("--strip-test-outputs", action="store_true")
    _add_hyper_flags(p)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("select-support", help="greedy support-set selection")
    p.add_argument("--train", required=True)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_hyper_flags(p)
    p.set_defaults(func=_cmd_select_support)

    p = sub.add_parser("run", help="run one experiment configuration")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run a grid of configurations")
    _add_config_flags(p)
    p.add_argument("--support-sizes", type=str, default=None, help="comma list")
    p.add_argument("--ranks", type=str, default=None, help="comma list")
    p.add_argument("--workers-list", type=str, default=None, help="comma list")
    p.add_argument("--seeds", type=str, default=None, help="comma list")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="aggregate results CSVs")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

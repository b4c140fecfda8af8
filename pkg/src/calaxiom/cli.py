"""Command line: ``calaxiom <command> [options]``.

Commands
--------
experiment  compare DT, IR and PS on datasets; write per-run rows and win counts
bias        sweep test sizes and bin counts; write bias of ECE and PDE
tradeoff    sweep tree sizes; write PDE (leaf bins) and 0/1 loss per size
popcheck    run the population property suites and pinned constructions
calibrate   fit one calibration model and write it as JSON
eval        score a score file against labels and print metric rows

Configs are JSON objects whose keys mirror the defaults printed by
``calaxiom <command> --show-config``; flags override config values. The
environment variable ``CALAXIOM_DATA_DIR`` sets the directory for relative
dataset paths.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .calibrators import fit_isotonic, fit_platt, fit_tree, save_model
from .checks import pinned_checks, run_property_suites
from .core import LabeledDataset, Partition, read_score_file
from .empirical import REPORT_FIELDS, evaluate
from .experiments import (BIAS_DEFAULTS, BIAS_FIELDS, EXPERIMENT_DEFAULTS, TRADEOFF_DEFAULTS,
                          TRADEOFF_FIELDS, bias_comparison, format_win_table, load_dataset,
                          rows_to_csv, run_bias, run_experiment, run_tradeoff, tradeoff_spearman,
                          win_counts, win_table_rows, with_defaults)


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise SystemExit(f"config {path} must hold a JSON object")
    return cfg


def _override(cfg: dict, args, names) -> dict:
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            cfg[name] = value
    return cfg


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def cmd_experiment(args) -> int:
    cfg = _override(_load_config(args.config), args,
                    ["datasets", "methods", "metrics", "B", "k", "theta", "seed", "repetitions"])
    if args.show_config:
        print(json.dumps(with_defaults(cfg, EXPERIMENT_DEFAULTS), indent=2))
        return 0
    rows = run_experiment(cfg)
    methods = with_defaults(cfg, EXPERIMENT_DEFAULTS)["methods"]
    table = win_counts(rows, methods=methods)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(rows_to_csv(rows, REPORT_FIELDS))
    (out / "wins.csv").write_text(rows_to_csv(win_table_rows(table, methods),
                                              ["metric", *methods]))
    print(format_win_table(table, methods))
    return 0


def cmd_bias(args) -> int:
    cfg = _override(_load_config(args.config), args, ["generator", "seed", "m"])
    if args.show_config:
        print(json.dumps(with_defaults(cfg, BIAS_DEFAULTS), indent=2))
        return 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # BFSL fallback is recorded per row
        rows = run_bias(cfg)
    _emit(rows_to_csv(rows, BIAS_FIELDS), args.out)
    for binning in with_defaults(cfg, BIAS_DEFAULTS)["binnings"]:
        comp = bias_comparison(rows, binning)
        wins = sum(p <= e for *_, e, p in comp)
        print(f"{binning}: |bias PDE| <= |bias ECE| in {wins} of {len(comp)} configurations "
              f"with >= 50 samples per bin", file=sys.stderr)
    return 0


def cmd_tradeoff(args) -> int:
    cfg = _override(_load_config(args.config), args, ["datasets", "seed"])
    if args.show_config:
        print(json.dumps(with_defaults(cfg, TRADEOFF_DEFAULTS), indent=2))
        return 0
    rows = run_tradeoff(cfg)
    _emit(rows_to_csv(rows, TRADEOFF_FIELDS), args.out)
    for name in sorted({r["dataset"] for r in rows}):
        print(f"{name}: spearman(leaves, pde) = {tradeoff_spearman(rows, name):.4f}",
              file=sys.stderr)
    return 0


def cmd_popcheck(args) -> int:
    violations = pinned_checks() + run_property_suites(args.n, args.seed, args.max_points)
    for v in violations:
        print(f"FAIL {v}")
    print(f"{'FAIL' if violations else 'PASS'}: {len(violations)} violations "
          f"({args.n} random instances, seed {args.seed})")
    return 1 if violations else 0


def _dataset(path, label) -> LabeledDataset:
    return load_dataset(str(path), label=label)


def cmd_calibrate(args) -> int:
    ds = _dataset(args.data, args.label)
    if args.method == "DT":
        model = fit_tree(ds.X, ds.y, min_leaf=args.min_leaf, cv_folds=args.cv_folds,
                         seed=args.seed)
    else:
        if args.scores is None:
            raise SystemExit(f"{args.method} needs --scores with base scores for each row")
        scores = read_score_file(args.scores)
        if scores.size != len(ds):
            raise SystemExit(f"{scores.size} scores for {len(ds)} rows")
        model = fit_isotonic(scores, ds.y) if args.method == "IR" else fit_platt(scores, ds.y)
    save_model(model, args.out)
    print(f"wrote {model.kind} model to {args.out}")
    return 0


def cmd_eval(args) -> int:
    scores = read_score_file(args.scores)
    labels = _dataset(args.labels, args.label).y
    if scores.size != labels.size:
        raise SystemExit(f"{scores.size} scores for {labels.size} labels")
    part = Partition.from_csv(args.partition) if args.partition else None
    reports = evaluate(scores, labels, args.metrics, B=args.B, p=args.p, k=args.k,
                       theta=args.theta, pde_partition=part)
    writer = csv.DictWriter(sys.stdout, fieldnames=REPORT_FIELDS, extrasaction="ignore",
                            lineterminator="\n")
    writer.writeheader()
    name = Path(args.scores).stem
    for r in reports:
        writer.writerow(r.row(run_id=name, dataset=Path(args.labels).stem, method="external",
                              seed=""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="calaxiom", description="Calibration metrics, calibrators and experiment drivers.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("experiment", help="compare DT, IR and PS with win counts")
    p.add_argument("--config")
    p.add_argument("--out", default="results")
    p.add_argument("--datasets", nargs="+")
    p.add_argument("--methods", nargs="+", choices=["DT", "IR", "PS"])
    p.add_argument("--metrics", nargs="+")
    p.add_argument("--B", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--show-config", action="store_true")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bias", help="bias of ECE and PDE on a synthetic generator")
    p.add_argument("--config")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.add_argument("--generator", help="preset name")
    p.add_argument("--seed", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--show-config", action="store_true")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("tradeoff", help="PDE and 0/1 loss across tree sizes")
    p.add_argument("--config")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.add_argument("--datasets", nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--show-config", action="store_true")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("popcheck", help="population property suites")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-points", type=int, default=20)
    p.set_defaults(func=cmd_popcheck)

    p = sub.add_parser("calibrate", help="fit one calibration model")
    p.add_argument("--method", choices=["DT", "IR", "PS"], required=True)
    p.add_argument("--data", required=True, help="CSV with numeric features and a label column")
    p.add_argument("--label", default="label")
    p.add_argument("--scores", help="base score CSV (index,score) for IR and PS")
    p.add_argument("--out", required=True)
    p.add_argument("--min-leaf", type=int, default=5)
    p.add_argument("--cv-folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eval", help="metrics of a score file")
    p.add_argument("--scores", required=True, help="CSV with columns index,score")
    p.add_argument("--labels", required=True, help="CSV with a label column")
    p.add_argument("--label", default="label")
    p.add_argument("--metrics", nargs="+",
                   default=["ece", "pde", "auc_v_knn", "rmse", "zero_one", "auc"])
    p.add_argument("--partition", help="CSV with columns index,bin_id for PDE")
    p.add_argument("--B", type=int, default=EXPERIMENT_DEFAULTS["B"])
    p.add_argument("--k", type=int, default=EXPERIMENT_DEFAULTS["k"])
    p.add_argument("--theta", type=float, default=EXPERIMENT_DEFAULTS["theta"])
    p.add_argument("--p", type=float, default=1)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

"""Experiment drivers behind the command line: method comparison with win
counts, the bias sweep for binned metrics, and the tree-size tradeoff sweep.

Every driver is a pure function of its config and returns rows; writing
CSV files is left to the caller. Results depend only on the config, so
reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import math
import os
import zlib
from pathlib import Path

import numpy as np
from scipy.stats import spearmanr

from .binning import bfsl_frontier, leaf_partition
from .calibrators import fit_base_scorer, fit_isotonic, fit_platt, fit_tree, grow_tree
from .core import LabeledDataset, SplitSpec
from .empirical import REPORT_FIELDS, binned_metric, bias, evaluate, pde, zero_one_loss
from .synthgen import PRESETS, make_generator

DATA_ENV = "CALAXIOM_DATA_DIR"
METHODS = ("DT", "IR", "PS")
METRICS = ("ece", "pde", "auc_v_knn", "rmse", "zero_one", "auc")
# metrics where larger is better; all others are minimised
HIGHER_IS_BETTER = {"auc", "auc_v_knn"}

EXPERIMENT_DEFAULTS = {
    "datasets": ["gen:cells20", "gen:synthetic-5"],
    "methods": list(METHODS),
    "metrics": list(METRICS),
    "B": 32,
    "k": 10,
    "theta": 0.5,
    "p": 1,
    "seed": 0,
    "repetitions": 10,
    "split": [0.405, 0.495, 0.10],
    "label": "label",
    "tree": {"min_leaf": 5, "cv_folds": 5},
    "base": {"l2": 1e-2},
}

BIAS_DEFAULTS = {
    "generator": "cells20",
    "generator_seed": 0,
    "train_size": 5000,
    "test_sizes": [500, 2000, 8000],
    "bins": [2, 8, 32],
    "binnings": ["uniform", "bfsl"],
    "m": 10,
    "seed": 0,
    "tree": {"min_leaf": 5, "cv_folds": 5, "prune": True},
}

TRADEOFF_DEFAULTS = {
    "datasets": ["gen:cells20:10000"],
    "leaf_budgets": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
    "seed": 0,
    "label": "label",
    "theta": 0.5,
    "tree": {"min_leaf": 1, "cv_folds": 5},
}


def with_defaults(config: dict | None, defaults: dict) -> dict:
    """Shallow merge of ``config`` over ``defaults``; nested dicts merge one level."""
    out = {k: (dict(v) if isinstance(v, dict) else v) for k, v in defaults.items()}
    for key, value in (config or {}).items():
        if key not in defaults:
            raise KeyError(f"unknown config key {key!r}")
        if isinstance(defaults[key], dict):
            out[key].update(value)
        else:
            out[key] = value
    return out


def derived_seed(master: int, name: str, rep: int) -> int:
    """Seed for one (dataset, repetition) unit, independent of run order."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(name.encode()), int(rep)])
    return int(ss.generate_state(1)[0])


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, "."))


def load_dataset(spec: str, label: str = "label", seed: int = 0) -> LabeledDataset:
    """Load ``gen:<preset>[:n]`` (synthetic, default 4000 rows) or a CSV path.

    Relative CSV paths resolve against ``$CALAXIOM_DATA_DIR`` when set.
    """
    if spec.startswith("gen:"):
        parts = spec.split(":")
        preset = parts[1]
        if preset not in PRESETS:
            raise ValueError(f"unknown generator preset {preset!r}")
        n = int(parts[2]) if len(parts) > 2 else 4000
        ds = make_generator(preset, seed).sample(n, key=(0, 0))
        return LabeledDataset(ds.X, ds.y, name=spec, eta=ds.eta)
    path = Path(spec)
    if not path.is_absolute():
        path = data_dir() / path
    if not path.exists():
        raise FileNotFoundError(f"dataset {spec!r} not found at {path}")
    ds = LabeledDataset.from_csv(path, label=label)
    return LabeledDataset(ds.X, ds.y, ds.base_score, ds.feature_names, spec, ds.eta)


# -- method comparison ---------------------------------------------------------

def run_unit(ds: LabeledDataset, rep: int, cfg: dict) -> list[dict]:
    """Fit and evaluate every method on one random split of ``ds``."""
    seed = derived_seed(cfg["seed"], ds.name, rep)
    split = SplitSpec(*cfg["split"], seed=seed)
    tr, ca, te = (ds.subset(i) for i in split.split(len(ds)))
    rows = []
    base = None
    for method in cfg["methods"]:
        pde_part = None
        if method == "DT":
            tree = fit_tree(ca.X, ca.y, min_leaf=cfg["tree"]["min_leaf"],
                            cv_folds=cfg["tree"]["cv_folds"], seed=seed)
            scores = tree.predict(te.X)
            pde_part = leaf_partition(tree, te.X)
        elif method in ("IR", "PS"):
            if base is None:
                base = fit_base_scorer(tr.X, tr.y, l2=cfg["base"]["l2"], seed=seed)
            s_cal, s_te = base.score(ca.X), base.score(te.X)
            model = fit_isotonic(s_cal, ca.y) if method == "IR" else fit_platt(s_cal, ca.y)
            scores = model.predict(s_te)
        else:
            raise ValueError(f"unknown method {method!r}")
        reports = evaluate(scores, te.y, cfg["metrics"], B=cfg["B"], p=cfg["p"], k=cfg["k"],
                           theta=cfg["theta"], pde_partition=pde_part)
        rows += [r.row(run_id=f"{ds.name}/{rep}", dataset=ds.name, method=method, seed=seed)
                 for r in reports]
    return rows


def run_experiment(config: dict | None = None) -> list[dict]:
    cfg = with_defaults(config, EXPERIMENT_DEFAULTS)
    rows = []
    for name in sorted(cfg["datasets"]):
        ds = load_dataset(name, cfg["label"], cfg["seed"])
        for rep in range(cfg["repetitions"]):
            rows += run_unit(ds, rep, cfg)
    return rows


def mean_table(rows: list[dict]) -> dict:
    """``{(dataset, metric): {method: mean value}}`` over repetitions."""
    acc: dict = {}
    for r in rows:
        acc.setdefault((r["dataset"], r["metric"]), {}).setdefault(r["method"], []).append(
            float(r["value"]))
    return {key: {m: math.fsum(v) / len(v) for m, v in by.items()} for key, by in acc.items()}


def win_counts(rows: list[dict], methods=METHODS, metrics=METRICS) -> dict:
    """``{metric: {method: wins}}``; ``None`` for a method never scored on a metric.

    A win is the best repetition-averaged value on one dataset. Ties credit
    every tied method, so a row can sum to more than the number of datasets.
    """
    table = {m: {meth: None for meth in methods} for m in metrics}
    for (dataset, metric), by in sorted(mean_table(rows).items()):
        if metric not in table:
            continue
        best = (max if metric in HIGHER_IS_BETTER else min)(by.values())
        for meth, v in by.items():
            if meth in table[metric]:
                table[metric][meth] = (table[metric][meth] or 0) + (v == best)
    return table


def format_win_table(table: dict, methods=METHODS) -> str:
    width = max(len(m) for m in table) + 2
    lines = ["metric".ljust(width) + "".join(m.rjust(6) for m in methods)]
    for metric, by in table.items():
        cells = ["-" if by[m] is None else str(by[m]) for m in methods]
        lines.append(metric.ljust(width) + "".join(c.rjust(6) for c in cells))
    return "\n".join(lines)


# -- bias sweep ----------------------------------------------------------------

BIAS_FIELDS = ["generator", "test_size", "B", "binning", "metric", "bias", "abs_bias",
               "samples_per_bin", "fallback", "m", "seed"]


def run_bias(config: dict | None = None) -> list[dict]:
    """Bias of ECE and PDE for a tree trained on synthetic data.

    A tree is fit on ``train_size`` rows (with cross-validated pruning
    unless ``tree.prune`` is false); for
    every test size, bin count and binning, ECE and PDE are compared against
    the true mean absolute deviation ``mean |f - eta|`` over ``m`` fresh test sets.
    """
    cfg = with_defaults(config, BIAS_DEFAULTS)
    gen = make_generator(cfg["generator"], cfg["generator_seed"])
    train = gen.sample(cfg["train_size"], key=(0, cfg["seed"]))
    if cfg["tree"]["prune"]:
        tree = fit_tree(train.X, train.y, min_leaf=cfg["tree"]["min_leaf"],
                        cv_folds=cfg["tree"]["cv_folds"], seed=cfg["seed"])
    else:
        tree = grow_tree(train.X, train.y, min_leaf=cfg["tree"]["min_leaf"])
    label = cfg["generator"] if isinstance(cfg["generator"], str) else gen.name
    rows = []
    for n in cfg["test_sizes"]:
        for B in cfg["bins"]:
            if B > n:
                continue
            for binning in cfg["binnings"]:
                fallback = binning == "bfsl" and bfsl_frontier(tree, B) is None
                for metric in ("ece", "pde"):
                    fn = binned_metric(metric, B, binning=binning, tree=tree)
                    value = bias(fn, gen, tree.predict, n, cfg["m"], cfg["seed"])
                    rows.append({"generator": label, "test_size": n, "B": B,
                                 "binning": binning, "metric": metric, "bias": repr(value),
                                 "abs_bias": repr(abs(value)), "samples_per_bin": repr(n / B),
                                 "fallback": int(fallback),
                                 "m": cfg["m"], "seed": cfg["seed"]})
    return rows


def bias_comparison(rows: list[dict], binning: str = "uniform",
                    min_per_bin: float = 50) -> list[tuple[int, int, float, float]]:
    """``(test_size, B, |bias ECE|, |bias PDE|)`` for configs with enough samples per bin."""
    by = {}
    for r in rows:
        if r["binning"] == binning and float(r["samples_per_bin"]) >= min_per_bin:
            by.setdefault((int(r["test_size"]), int(r["B"])), {})[r["metric"]] = float(
                r["abs_bias"])
    return [(n, B, v["ece"], v["pde"]) for (n, B), v in sorted(by.items())]


# -- tradeoff sweep ------------------------------------------------------------

TRADEOFF_FIELDS = ["dataset", "kind", "leaf_budget", "leaves", "pde", "zero_one", "seed"]


def run_tradeoff(config: dict | None = None) -> list[dict]:
    """PDE (leaf bins) and 0/1 loss of trees of growing size.

    Each dataset is split in half; trees grown best-first to each leaf
    budget on the first half are scored on the second. One extra row per
    dataset (``kind == "pruned"``) holds the cross-validated pruned tree.
    """
    cfg = with_defaults(config, TRADEOFF_DEFAULTS)
    rows = []
    for name in sorted(cfg["datasets"]):
        ds = load_dataset(name, cfg["label"], cfg["seed"])
        seed = derived_seed(cfg["seed"], ds.name, 0)
        perm = np.random.default_rng(seed).permutation(len(ds))
        half = len(ds) // 2
        tr, te = ds.subset(np.sort(perm[:half])), ds.subset(np.sort(perm[half:]))
        full = grow_tree(tr.X, tr.y, min_leaf=cfg["tree"]["min_leaf"])
        models = []
        for budget in cfg["leaf_budgets"]:
            if budget >= full.n_leaves:
                models.append(("sweep", budget, full))
            else:
                models.append(("sweep", budget, grow_tree(tr.X, tr.y, cfg["tree"]["min_leaf"],
                                                          max_leaves=budget)))
        pruned = fit_tree(tr.X, tr.y, min_leaf=cfg["tree"]["min_leaf"],
                          cv_folds=cfg["tree"]["cv_folds"], seed=seed)
        models.append(("pruned", "", pruned))
        for kind, budget, tree in models:
            s = tree.predict(te.X)
            rows.append({"dataset": ds.name, "kind": kind, "leaf_budget": budget,
                         "leaves": tree.n_leaves,
                         "pde": repr(pde(s, te.y, leaf_partition(tree, te.X))),
                         "zero_one": repr(zero_one_loss(s, te.y, cfg["theta"])),
                         "seed": seed})
    return rows


def tradeoff_spearman(rows: list[dict], dataset: str) -> float:
    """Spearman correlation of leaf count and PDE across one dataset's sweep rows."""
    sweep = [r for r in rows if r["dataset"] == dataset and r["kind"] == "sweep"]
    return float(spearmanr([int(r["leaves"]) for r in sweep],
                           [float(r["pde"]) for r in sweep]).statistic)


# -- output --------------------------------------------------------------------

def rows_to_csv(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def write_rows(path, rows: list[dict], fields: list[str]) -> None:
    Path(path).write_text(rows_to_csv(rows, fields))


def win_table_rows(table: dict, methods=METHODS) -> list[dict]:
    return [{"metric": metric, **{m: "-" if by[m] is None else by[m] for m in methods}}
            for metric, by in table.items()]


__all__ = [
    "EXPERIMENT_DEFAULTS", "BIAS_DEFAULTS", "TRADEOFF_DEFAULTS", "REPORT_FIELDS", "BIAS_FIELDS",
    "TRADEOFF_FIELDS", "run_experiment", "run_bias", "run_tradeoff", "win_counts",
    "format_win_table", "bias_comparison", "tradeoff_spearman", "derived_seed",
    "load_dataset", "rows_to_csv", "write_rows", "with_defaults",
]

"""Finite-sample evaluation metrics and the bias of binned calibration metrics."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .binning import bfsl, leaf_partition, uniform_mass
from .core import LabeledDataset, Partition, PartitionError
from .population import ValidityCurve


class UndefinedMetricError(ValueError):
    """The metric is undefined on this input (e.g. AUC with one class)."""


def _pair(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("empty input")
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    return s, y


def zero_one_loss(scores, labels, theta: float = 0.5) -> float:
    """Error rate of ``1{score >= theta}``."""
    s, y = _pair(scores, labels)
    return float(np.mean((s >= theta).astype(float) != y))


def rmse(scores, labels) -> float:
    s, y = _pair(scores, labels)
    return float(np.sqrt(np.mean((s - y) ** 2)))


def auc_roc(scores, labels) -> float:
    """Mann-Whitney AUC: ``P[s+ > s-] + 0.5 P[s+ = s-]`` over positive/negative pairs."""
    s, y = _pair(scores, labels)
    pos = y == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes")
    ranks = rankdata(s)  # midranks give ties half credit
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def _resolve_partition(scores, partition) -> Partition:
    if isinstance(partition, (int, np.integer)):
        return uniform_mass(scores, int(partition))
    if partition.n != len(scores):
        raise PartitionError(f"partition covers {partition.n} indices, data has {len(scores)}")
    return partition


def _mean(values) -> float:
    # correctly rounded, so a bin of 0.35s and 0.65s averages to exactly 0.5
    return math.fsum(values) / len(values)


def bin_pce(scores, labels, partition) -> np.ndarray:
    """Per-bin ``|mean score - mean label|``."""
    s, y = _pair(scores, labels)
    part = _resolve_partition(s, partition)
    return np.array([abs(_mean(s[b]) - _mean(y[b])) for b in part.bins])


def bin_ppd(scores, labels, partition) -> np.ndarray:
    """Per-bin mean of ``|score - mean label|``."""
    s, y = _pair(scores, labels)
    part = _resolve_partition(s, partition)
    return np.array([_mean(np.abs(s[b] - _mean(y[b]))) for b in part.bins])


def _lp(weights, per_bin, p):
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    return float(np.dot(weights, per_bin ** p) ** (1.0 / p))


def ece(scores, labels, partition, p: float = 1) -> float:
    """Binned expected calibration error.

    ``partition`` is a :class:`Partition` over the sample indices or an
    integer bin count for uniform-mass binning. Bins are weighted by their
    share of the samples.
    """
    s, _ = _pair(scores, labels)
    part = _resolve_partition(s, partition)
    return _lp(part.weights, bin_pce(scores, labels, part), p)


def pde(scores, labels, partition, p: float = 1) -> float:
    """Probability deviation error: like :func:`ece` but compares each score,
    not the bin's mean score, with the bin's label mean."""
    s, _ = _pair(scores, labels)
    part = _resolve_partition(s, partition)
    return _lp(part.weights, bin_ppd(scores, labels, part), p)


def knn_label_means(scores, labels, k: int) -> np.ndarray:
    """Mean label over the ``k`` samples with the closest scores to each sample.

    The query sample always counts as its own neighbour; remaining ties in
    distance go to the smaller index.
    """
    s, y = _pair(scores, labels)
    n = s.size
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    order = np.argsort(s, kind="stable")
    ss, yy = s[order], y[order]
    pos_of = np.empty(n, dtype=np.intp)
    pos_of[order] = np.arange(n)
    block_start = np.searchsorted(ss, ss, side="left")
    out = np.empty(n)
    for i in range(n):
        p = pos_of[i]
        lo, hi = max(0, p - k), min(n, p + k + 1)
        # the k nearest lie in the +-k window, except that ties at the window's
        # edge values may be won by lower-index samples further out; those are
        # the first k members of the edge values' blocks
        cand = [np.arange(lo, hi)]
        for b in {block_start[lo], block_start[hi - 1], block_start[p]}:
            cand.append(np.arange(b, min(b + k, n)))
        cand = np.unique(np.concatenate(cand))
        dist = np.abs(ss[cand] - s[i])
        pick = np.lexsort((order[cand], cand != p, dist))[:k]
        out[i] = yy[cand[pick]].mean()
    return out


def knn_validity_curve(scores, labels, k: int) -> ValidityCurve:
    """Estimated validity curve from k-nearest-neighbour label means."""
    s, _ = _pair(scores, labels)
    err = np.abs(s - knn_label_means(scores, labels, k))
    return ValidityCurve.from_errors(np.minimum(err, 1.0))


def auc_v_knn(scores, labels, k: int = 10) -> float:
    """Area over ``[0, 1]`` under the k-NN validity curve."""
    return knn_validity_curve(scores, labels, k).area()


@dataclass(frozen=True)
class MetricReport:
    """One evaluated metric with the parameters that produced it."""

    metric: str
    value: float
    params: dict = field(default_factory=dict)
    partition: str = ""

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"{self.metric} is not finite: {self.value!r}")

    def row(self, **extra) -> dict:
        out = dict(extra)
        out.update(metric=self.metric, params=json.dumps(self.params, sort_keys=True),
                   value=repr(float(self.value)), partition=self.partition)
        return out


REPORT_FIELDS = ["run_id", "dataset", "method", "metric", "params", "value", "seed", "partition"]


def append_reports(path, reports, **extra) -> None:
    """Append report rows to a results CSV, writing the header for a new file."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_FIELDS, extrasaction="ignore")
        if new:
            writer.writeheader()
        for r in reports:
            writer.writerow(r.row(**extra))


def evaluate(scores, labels, metrics=("rmse", "zero_one", "auc", "ece", "pde", "auc_v_knn"),
             B: int = 32, p: float = 1, k: int = 10, theta: float = 0.5,
             pde_partition: Partition | None = None) -> list[MetricReport]:
    """Evaluate named metrics.

    ``ece`` uses uniform-mass bins (``min(B, n)`` of them). ``pde`` is only
    reported when ``pde_partition`` is given. Metrics that are undefined on
    the input (AUC with a single class) are left out.
    """
    s, y = _pair(scores, labels)
    out = []
    for name in metrics:
        if name == "rmse":
            out.append(MetricReport(name, rmse(s, y)))
        elif name == "zero_one":
            out.append(MetricReport(name, zero_one_loss(s, y, theta), {"theta": theta}))
        elif name == "auc":
            try:
                out.append(MetricReport(name, auc_roc(s, y)))
            except UndefinedMetricError:
                pass
        elif name == "ece":
            b = min(B, s.size)
            out.append(MetricReport(name, ece(s, y, b, p), {"B": b, "p": p}, "uniform_mass"))
        elif name == "pde":
            if pde_partition is not None:
                out.append(MetricReport(name, pde(s, y, pde_partition, p), {"p": p}, "leaf"))
        elif name == "auc_v_knn":
            kk = min(k, s.size)
            out.append(MetricReport(name, auc_v_knn(s, y, kk), {"k": kk}))
        else:
            raise KeyError(f"unknown metric {name!r}")
    return out


MetricFn = Callable[[LabeledDataset, np.ndarray], float]


def mean_abs_eta_error(sample: LabeledDataset, scores) -> float:
    """``mean |f(x_i) - eta(x_i)|``: the quantity binned metrics estimate."""
    if sample.eta is None:
        raise ValueError("sample carries no eta oracle")
    return float(np.mean(np.abs(np.asarray(scores, dtype=float) - sample.eta)))


def binned_metric(name: str, B: int, p: float = 1, binning: str = "uniform",
                  tree=None) -> MetricFn:
    """ECE or PDE as a function of ``(sample, scores)``.

    ``binning`` is ``"uniform"`` (uniform mass over the scores), ``"bfsl"``
    or ``"leaf"`` (both need ``tree``).
    """
    fn = {"ece": ece, "pde": pde}[name]

    def metric(sample: LabeledDataset, scores) -> float:
        if binning == "uniform":
            part = uniform_mass(scores, B)
        elif binning == "bfsl":
            part = bfsl(tree, sample.X, B)
        elif binning == "leaf":
            part = leaf_partition(tree, sample.X)
        else:
            raise ValueError(f"unknown binning {binning!r}")
        return fn(scores, sample.y, part, p)

    return metric


def bias(metric: MetricFn, generator, predictor: Callable, n: int, m: int = 10,
         seed: int = 0) -> float:
    """Average of ``metric - mean|f - eta|`` over ``m`` fresh test sets of size ``n``.

    ``generator`` must expose ``sample(n, key)`` returning rows with an
    ``eta`` oracle; repetition ``r`` draws with key ``(1, seed, r)``, which
    keeps test draws apart from training draws keyed ``(0, ...)``.
    """
    if not hasattr(generator, "eta") or not hasattr(generator, "sample"):
        raise TypeError("generator must provide sample() and an eta oracle")
    if m < 1:
        raise ValueError("m must be positive")
    diffs = []
    for r in range(m):
        sample = generator.sample(n, key=(1, seed, r))
        if sample.eta is None:
            raise TypeError("generator returned rows without eta")
        scores = np.asarray(predictor(sample.X), dtype=float)
        diffs.append(metric(sample, scores) - mean_abs_eta_error(sample, scores))
    return math.fsum(diffs) / m

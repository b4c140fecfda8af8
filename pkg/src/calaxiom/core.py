"""Domain types shared by the population engine, the empirical metrics and the
experiment harness.

Everything here is immutable after construction. Population objects
(:class:`DiscreteDistribution`, :class:`ScoreTable`) describe a finite
support exactly; :class:`LabeledDataset` holds sampled rows.
"""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

WEIGHT_TOL = 1e-12


class TotalityError(KeyError):
    """A score table has no entry for some support point."""


class PartitionError(ValueError):
    """Bins overlap, leave indices uncovered, or are empty."""


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite distribution over (x, y) given by its marginal and regression function.

    Parameters
    ----------
    ids : sequence of hashable
        Support point identifiers, unique.
    weights : array-like
        Marginal probability of each point. Must be positive and sum to one
        within ``1e-12``; they are renormalised once here.
    etas : array-like
        ``P[y = 1 | x]`` for each point, in ``[0, 1]``.
    """

    ids: tuple
    weights: np.ndarray
    etas: np.ndarray

    def __init__(self, ids: Iterable[Hashable], weights, etas):
        ids = tuple(ids)
        w = np.asarray(weights, dtype=float).ravel()
        e = np.asarray(etas, dtype=float).ravel()
        if not (len(ids) == w.size == e.size):
            raise ValueError("ids, weights and etas must have equal length")
        if w.size == 0:
            raise ValueError("empty support")
        if len(set(ids)) != len(ids):
            raise ValueError("point ids must be unique")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("every weight must be positive and finite")
        total = math.fsum(w)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total!r}, not 1")
        if not np.all((e >= 0) & (e <= 1)):
            raise ValueError("every eta must lie in [0, 1]")
        w = w / total
        w.setflags(write=False)
        e = e.copy()
        e.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "etas", e)

    @classmethod
    def from_points(cls, points: Iterable[tuple]) -> "DiscreteDistribution":
        """Build from ``(id, weight, eta)`` triples."""
        points = list(points)
        return cls([p[0] for p in points], [p[1] for p in points], [p[2] for p in points])

    @classmethod
    def uniform(cls, etas: Sequence[float], ids: Iterable[Hashable] | None = None):
        n = len(etas)
        return cls(range(n) if ids is None else ids, np.full(n, 1.0 / n), etas)

    def __len__(self) -> int:
        return len(self.ids)

    def index(self) -> dict:
        return {pid: i for i, pid in enumerate(self.ids)}

    def score_table(self, scores: Sequence[float]) -> "ScoreTable":
        """Pair ``scores`` positionally with this support."""
        if len(scores) != len(self.ids):
            raise ValueError("one score per support point required")
        return ScoreTable(dict(zip(self.ids, (float(s) for s in scores))))

    def eta_table(self) -> "ScoreTable":
        """The regression function itself as a predictor."""
        return self.score_table(self.etas)

    def to_json(self) -> str:
        rows = [{"id": pid, "weight": float(w), "eta": float(e)}
                for pid, w, e in zip(self.ids, self.weights, self.etas)]
        return json.dumps(rows, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDistribution":
        rows = json.loads(text)
        if isinstance(rows, Mapping):
            rows = rows["points"]
        return cls([r["id"] for r in rows], [r["weight"] for r in rows], [r["eta"] for r in rows])

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return (self.ids == other.ids and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.etas, other.etas))

    __hash__ = None


@dataclass(frozen=True)
class ScoreTable:
    """A predictor restricted to a finite support: ``id -> score``."""

    entries: Mapping[Hashable, float]

    def __init__(self, entries: Mapping[Hashable, float]):
        object.__setattr__(self, "entries", {k: float(v) for k, v in dict(entries).items()})

    def __getitem__(self, pid):
        return self.entries[pid]

    def __len__(self):
        return len(self.entries)

    def on(self, dist: DiscreteDistribution) -> np.ndarray:
        """Scores aligned with ``dist.ids``."""
        try:
            return np.array([self.entries[pid] for pid in dist.ids], dtype=float)
        except KeyError as exc:
            raise TotalityError(f"no score for support point {exc.args[0]!r}") from None

    def to_json(self) -> str:
        return json.dumps([{"id": k, "score": v} for k, v in self.entries.items()], indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ScoreTable":
        rows = json.loads(text)
        if isinstance(rows, Mapping):
            rows = rows["entries"]
        return cls({r["id"]: r["score"] for r in rows})

    def __eq__(self, other):
        if not isinstance(other, ScoreTable):
            return NotImplemented
        return self.entries == other.entries

    __hash__ = None


@dataclass(frozen=True)
class Partition:
    """Disjoint, covering assignment of ``n`` indices to bins.

    ``weights`` default to bin size over ``n``; population cells pass their
    probability mass instead. ``keys`` label the bins (cell score, tree node
    id, ...). ``fallback`` is set when a builder could not honour the
    requested bin count and returned something coarser or finer.
    """

    bins: tuple
    weights: np.ndarray
    keys: tuple = ()
    fallback: bool = False

    def __init__(self, bins: Iterable[Iterable[int]], weights=None, keys: Iterable = (),
                 n: int | None = None, fallback: bool = False):
        bins = tuple(np.asarray(sorted(b), dtype=np.intp) for b in bins)
        for b in bins:
            b.setflags(write=False)
        if any(b.size == 0 for b in bins):
            raise PartitionError("empty bin")
        flat = np.concatenate(bins) if bins else np.empty(0, dtype=np.intp)
        total = flat.size if n is None else n
        if flat.size != total or not np.array_equal(np.sort(flat), np.arange(total)):
            raise PartitionError("bins must be disjoint and cover every index exactly once")
        if weights is None:
            w = np.array([b.size / total for b in bins], dtype=float)
        else:
            w = np.asarray(weights, dtype=float).ravel()
            if w.size != len(bins):
                raise PartitionError("one weight per bin required")
            if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
                raise PartitionError("bin weights must sum to 1")
        w.setflags(write=False)
        keys = tuple(keys)
        if keys and len(keys) != len(bins):
            raise PartitionError("one key per bin required")
        object.__setattr__(self, "bins", bins)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "fallback", bool(fallback))

    def __len__(self):
        return len(self.bins)

    @property
    def n(self) -> int:
        return int(sum(b.size for b in self.bins))

    def labels(self) -> np.ndarray:
        """Bin number for every index."""
        out = np.empty(self.n, dtype=np.intp)
        for j, b in enumerate(self.bins):
            out[b] = j
        return out

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        labels = np.asarray(labels)
        keys = np.unique(labels)
        return cls([np.flatnonzero(labels == k) for k in keys], keys=keys.tolist())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "bin_id"])
            for i, j in enumerate(self.labels()):
                writer.writerow([i, int(j)])

    @classmethod
    def from_csv(cls, path) -> "Partition":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        rows.sort(key=lambda r: int(r["index"]))
        return cls.from_labels([int(r["bin_id"]) for r in rows])


def effective_range(dist: DiscreteDistribution, f: ScoreTable) -> set[float]:
    """Values ``f`` takes on the support, deduplicated by exact equality."""
    return set(f.on(dist).tolist())


def cells(dist: DiscreteDistribution, f: ScoreTable) -> Partition:
    """Level sets of ``f`` on the support, weighted by probability mass.

    Bins are ordered by ascending score and keyed by it.
    """
    scores = f.on(dist)
    values, inverse = np.unique(scores, return_inverse=True)
    bins = [np.flatnonzero(inverse == j) for j in range(values.size)]
    masses = [math.fsum(dist.weights[b]) for b in bins]
    return Partition(bins, weights=masses, keys=values.tolist())


@dataclass(frozen=True)
class SplitSpec:
    """Train / calibration / test fractions plus the shuffling seed."""

    train_frac: float = 0.405
    calib_frac: float = 0.495
    test_frac: float = 0.10
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.calib_frac, self.test_frac)
        if min(fracs) <= 0:
            raise ValueError("split fractions must be positive")
        if abs(math.fsum(fracs) - 1.0) > WEIGHT_TOL:
            raise ValueError("split fractions must sum to 1")

    def split(self, n: int, seed: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Shuffle ``range(n)`` and cut it into (train, calib, test) index arrays."""
        rng = np.random.default_rng(self.seed if seed is None else seed)
        perm = rng.permutation(n)
        n_train = int(round(self.train_frac * n))
        n_calib = int(round(self.calib_frac * n))
        if n_train < 1 or n_calib < 1 or n - n_train - n_calib < 1:
            raise ValueError(f"{n} rows are too few for this split")
        return perm[:n_train], perm[n_train:n_train + n_calib], perm[n_train + n_calib:]


@dataclass(frozen=True)
class LabeledDataset:
    """Numeric feature rows with binary labels and optional base scores."""

    X: np.ndarray
    y: np.ndarray
    base_score: np.ndarray | None = None
    feature_names: tuple = ()
    name: str = ""
    eta: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("features must form a 2-D array")
        y = np.asarray(self.y)
        if y.shape != (X.shape[0],):
            raise ValueError("one label per row required")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y.astype(np.int64))
        for name in ("base_score", "eta"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float)
                if v.shape != (X.shape[0],):
                    raise ValueError(f"{name} needs one value per row")
                object.__setattr__(self, name, v)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{j}" for j in range(X.shape[1])))

    def __len__(self):
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            self.X[idx], self.y[idx],
            None if self.base_score is None else self.base_score[idx],
            self.feature_names, self.name,
            None if self.eta is None else self.eta[idx],
        )

    @classmethod
    def from_csv(cls, path, label: str = "label", features: Sequence[str] | None = None,
                 name: str | None = None) -> "LabeledDataset":
        """Read a header-row CSV whose feature columns are already numeric.

        A label column with more than two classes, or with two classes other
        than ``{0, 1}``, is binarised as most-frequent-class versus rest.
        An ``eta`` column, if present and not listed as a feature, is kept as
        the regression-function oracle.
        """
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            rows = list(reader)
        if label not in header:
            raise KeyError(f"label column {label!r} not in {path}")
        if features is None:
            features = [c for c in header if c not in (label, "eta")]
        X = np.array([[float(r[c]) for c in features] for r in rows], dtype=float)
        y = binarize_labels([r[label] for r in rows])
        eta = None
        if "eta" in header and "eta" not in features:
            eta = np.array([float(r["eta"]) for r in rows])
        return cls(X, y, feature_names=tuple(features), name=name or path.stem, eta=eta)

    def to_csv(self, path, label: str = "label") -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            head = list(self.feature_names) + [label] + (["eta"] if self.eta is not None else [])
            writer.writerow(head)
            for i in range(len(self)):
                row = [repr(float(v)) for v in self.X[i]] + [int(self.y[i])]
                if self.eta is not None:
                    row.append(repr(float(self.eta[i])))
                writer.writerow(row)


def binarize_labels(raw: Sequence[Any]) -> np.ndarray:
    """Map raw class labels to ``{0, 1}``.

    Labels that already read as 0/1 pass through; anything else becomes
    1 for the most frequent class (smallest value on count ties) and 0 otherwise.
    """
    vals = [str(v).strip() for v in raw]
    as_num = []
    for v in vals:
        try:
            as_num.append(float(v))
        except ValueError:
            break
    if len(as_num) == len(vals) and set(as_num) <= {0.0, 1.0}:
        return np.array(as_num, dtype=np.int64)
    counts = Counter(vals)
    top = min(counts, key=lambda c: (-counts[c], c))
    return np.array([1 if v == top else 0 for v in vals], dtype=np.int64)


def read_score_file(path) -> np.ndarray:
    """Scores from a CSV with ``index,score`` columns, returned in index order."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    idx = np.array([int(r["index"]) for r in rows])
    if not np.array_equal(np.sort(idx), np.arange(idx.size)):
        raise ValueError(f"{path}: indices must be 0..n-1 exactly once")
    out = np.empty(idx.size)
    out[idx] = [float(r["score"]) for r in rows]
    return out


def write_score_file(path, scores: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "score"])
        for i, s in enumerate(scores):
            writer.writerow([i, repr(float(s))])

"""Synthetic data with a known regression function.

Two families are provided. A *cell generator* is a set of disjoint
axis-aligned boxes, each with a probability weight and a constant label
probability. A *smooth generator* draws features uniformly from
``[-1, 1]^d`` and sets the label probability to the logistic of a random
quadratic polynomial. Both expose the exact label probability of any point
through ``eta(X)`` and draw samples statelessly: ``sample(n, key)`` depends
only on the generator seed and ``key``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from .core import DiscreteDistribution, LabeledDataset


def _rng(seed: int, key) -> np.random.Generator:
    key = (key,) if isinstance(key, (int, np.integer)) else tuple(key)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class Box:
    low: np.ndarray
    high: np.ndarray
    eta: float
    weight: float

    def contains(self, X) -> np.ndarray:
        return np.all((X >= self.low) & (X < self.high), axis=1)

    def overlaps(self, other: "Box") -> bool:
        return bool(np.all(self.low < other.high) and np.all(other.low < self.high))


@dataclass(frozen=True)
class CellGenerator:
    """Disjoint half-open boxes ``[low, high)`` with weights and label probabilities."""

    boxes: tuple
    seed: int = 0
    name: str = "cells"

    @property
    def d(self) -> int:
        return self.boxes[0].low.size

    def cell_of(self, X) -> np.ndarray:
        """Box index of each row; ``-1`` outside every box."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(X.shape[0], -1, dtype=np.intp)
        for i, b in enumerate(self.boxes):
            out[b.contains(X)] = i
        return out

    def eta(self, X) -> np.ndarray:
        idx = self.cell_of(X)
        if np.any(idx < 0):
            raise ValueError("point outside every cell has no defined label probability")
        return np.array([b.eta for b in self.boxes])[idx]

    def sample(self, n: int, key=0) -> LabeledDataset:
        rng = _rng(self.seed, key)
        w = np.array([b.weight for b in self.boxes])
        which = rng.choice(len(self.boxes), size=n, p=w / w.sum())
        low = np.stack([b.low for b in self.boxes])[which]
        high = np.stack([b.high for b in self.boxes])[which]
        X = low + rng.random((n, self.d)) * (high - low)
        # guard the half-open upper edge against rounding up
        X = np.minimum(X, np.nextafter(high, low))
        eta = np.array([b.eta for b in self.boxes])[which]
        y = (rng.random(n) < eta).astype(np.int64)
        return LabeledDataset(X, y, name=self.name, eta=eta)

    def to_discrete(self) -> DiscreteDistribution:
        """The distribution over cells: one point per box."""
        return DiscreteDistribution(range(len(self.boxes)), [b.weight for b in self.boxes],
                                    [b.eta for b in self.boxes])

    def to_config(self) -> dict:
        return {"type": "cells", "d": self.d, "name": self.name,
                "cells": [{"low": b.low.tolist(), "high": b.high.tolist(), "eta": b.eta,
                           "weight": b.weight} for b in self.boxes]}


def make_cell_generator(spec: dict, seed: int = 0) -> CellGenerator:
    """Build a :class:`CellGenerator` from ``{"d": ..., "cells": [...]}``.

    Each cell is ``{"low": [...], "high": [...], "eta": e, "weight": w}``.
    Weights must sum to 1 within 1e-12 and boxes must not overlap.
    """
    d = int(spec["d"])
    boxes = []
    for c in spec["cells"]:
        low = np.asarray(c["low"], dtype=float)
        high = np.asarray(c["high"], dtype=float)
        if low.shape != (d,) or high.shape != (d,):
            raise ValueError(f"cell bounds must have dimension {d}")
        if not np.all(low < high):
            raise ValueError("cell bounds need low < high in every coordinate")
        eta, weight = float(c["eta"]), float(c["weight"])
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta {eta} outside [0, 1]")
        if weight <= 0:
            raise ValueError("cell weights must be positive")
        boxes.append(Box(low, high, eta, weight))
    if not boxes:
        raise ValueError("at least one cell required")
    total = math.fsum(b.weight for b in boxes)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"cell weights sum to {total!r}, not 1")
    for (i, a), (j, b) in ((p, q) for p in enumerate(boxes) for q in enumerate(boxes)):
        if i < j and a.overlaps(b):
            raise ValueError(f"cells {i} and {j} overlap")
    return CellGenerator(tuple(boxes), int(seed), spec.get("name", "cells"))


_TINY = np.nextafter(0.0, 1.0)
_BELOW_ONE = np.nextafter(1.0, 0.0)


def _monomials(d: int):
    yield ()
    for j in range(d):
        yield (j,)
    yield from combinations_with_replacement(range(d), 2)


@dataclass(frozen=True)
class SmoothGenerator:
    """Uniform features on ``[-1, 1]^d``; label probability ``sigmoid(poly(x))``.

    ``poly`` has one coefficient per monomial of degree at most 2, ordered
    constant, linear terms, then pairs ``(j, l)`` with ``j <= l``.
    """

    d: int
    coefficients: np.ndarray
    seed: int = 0
    name: str = "smooth"
    terms: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(_monomials(self.d)))
        if np.shape(self.coefficients) != (len(self.terms),):
            raise ValueError(f"need {len(self.terms)} coefficients for d={self.d}")

    def features(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.stack([np.prod(X[:, list(t)], axis=1) for t in self.terms], axis=1)

    def eta(self, X) -> np.ndarray:
        z = self.features(X) @ self.coefficients
        # the logistic rounds to exactly 0 or 1 for large |z|; stay strictly inside
        return np.clip(np.exp(-np.logaddexp(0.0, -z)), _TINY, _BELOW_ONE)

    def sample(self, n: int, key=0) -> LabeledDataset:
        rng = _rng(self.seed, key)
        X = rng.uniform(-1.0, 1.0, size=(n, self.d))
        eta = self.eta(X)
        y = (rng.random(n) < eta).astype(np.int64)
        return LabeledDataset(X, y, name=self.name, eta=eta)

    def to_config(self) -> dict:
        return {"type": "smooth", "d": self.d, "name": self.name,
                "coefficients": self.coefficients.tolist()}


def make_smooth_generator(spec: dict, seed: int = 0) -> SmoothGenerator:
    """Build a :class:`SmoothGenerator` from ``{"d": ..., "coefficient_seed": ...}``.

    Coefficients are standard normal scaled by ``"scale"`` (default 1.5)
    unless given explicitly as ``"coefficients"``.
    """
    d = int(spec["d"])
    if d < 1:
        raise ValueError("dimension must be positive")
    n_terms = 1 + d + d * (d + 1) // 2
    if spec.get("coefficients") is not None:
        coef = np.asarray(spec["coefficients"], dtype=float)
    else:
        rng = np.random.default_rng(int(spec.get("coefficient_seed", 0)))
        coef = float(spec.get("scale", 1.5)) * rng.standard_normal(n_terms)
    return SmoothGenerator(d, coef, int(seed), spec.get("name", "smooth"))


def grid_cells(shape=(5, 4), seed: int = 0, name: str = "cells20") -> dict:
    """Spec for a grid of cells on the unit square with random etas and weights."""
    rng = np.random.default_rng(seed)
    nx, ny = shape
    n = nx * ny
    etas = rng.random(n)
    weights = rng.dirichlet(np.full(n, 5.0))
    weights[-1] = 1.0 - math.fsum(weights[:-1])
    cells = []
    for i in range(nx):
        for j in range(ny):
            k = i * ny + j
            cells.append({"low": [i / nx, j / ny], "high": [(i + 1) / nx, (j + 1) / ny],
                          "eta": float(etas[k]), "weight": float(weights[k])})
    return {"type": "cells", "d": 2, "name": name, "cells": cells}


PRESETS = {
    "cells20": lambda: grid_cells((5, 4), seed=20),
    "synthetic-5": lambda: {"type": "smooth", "d": 5, "coefficient_seed": 5,
                            "name": "synthetic-5"},
}


def make_generator(spec, seed: int = 0):
    """Generator from a preset name or a config dict with ``"type"`` in ``{cells, smooth}``."""
    if isinstance(spec, str):
        try:
            spec = PRESETS[spec]()
        except KeyError:
            raise ValueError(f"unknown generator preset {spec!r}; "
                             f"choose from {sorted(PRESETS)}") from None
    kind = spec.get("type")
    if kind == "cells":
        return make_cell_generator(spec, seed)
    if kind == "smooth":
        return make_smooth_generator(spec, seed)
    raise ValueError(f"unknown generator type {kind!r}")

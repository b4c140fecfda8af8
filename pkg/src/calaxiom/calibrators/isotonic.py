"""Isotonic regression by pool-adjacent-violators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class IsotonicModel:
    """Nondecreasing step function through ``(knots[i], values[i])``.

    Between knots the value of the left knot holds; queries outside the
    training range are clamped to the end values.
    """

    knots: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    kind = "isotonic"

    def predict(self, scores) -> np.ndarray:
        s = np.asarray(scores, dtype=float)
        pos = np.searchsorted(self.knots, s, side="right") - 1
        return self.values[np.clip(pos, 0, self.knots.size - 1)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "knots": self.knots.tolist(), "values": self.values.tolist(),
                "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "IsotonicModel":
        return cls(np.array(d["knots"], dtype=float), np.array(d["values"], dtype=float),
                   dict(d.get("meta", {})))


def pava(values, weights=None) -> np.ndarray:
    """Weighted least-squares nondecreasing fit to ``values`` in the given order."""
    v = np.asarray(values, dtype=float)
    w = np.ones_like(v) if weights is None else np.asarray(weights, dtype=float)
    # blocks as parallel stacks: weighted sum, weight, element count
    sums, wts, sizes = [], [], []
    for vi, wi in zip(v.tolist(), w.tolist()):
        sums.append(vi * wi)
        wts.append(wi)
        sizes.append(1)
        while len(sums) > 1 and sums[-2] / wts[-2] > sums[-1] / wts[-1]:
            s, ww, k = sums.pop(), wts.pop(), sizes.pop()
            sums[-1] += s
            wts[-1] += ww
            sizes[-1] += k
    return np.repeat([s / ww for s, ww in zip(sums, wts)], sizes)


def fit_isotonic(scores, labels) -> IsotonicModel:
    """Fit labels as a nondecreasing function of scores.

    Samples are ordered by (score, index); samples sharing a score are
    pooled before PAVA runs, so each distinct score gets one fitted value.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if s.size == 0 or s.shape != y.shape:
        raise ValueError("need equally many scores and labels, at least one")
    knots, inverse, counts = np.unique(s, return_inverse=True, return_counts=True)
    means = np.bincount(inverse, weights=y) / counts
    fitted = pava(means, counts)
    return IsotonicModel(knots, fitted, {"n": int(s.size)})

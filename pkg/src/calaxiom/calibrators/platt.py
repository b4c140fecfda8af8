"""Platt scaling: a sigmoid in the base score, fit by damped Newton."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConvergenceError(RuntimeError):
    """Iteration limit hit; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


@dataclass(frozen=True)
class PlattModel:
    """``p(s) = 1 / (1 + exp(A s + B))``."""

    A: float
    B: float
    meta: dict = field(default_factory=dict)

    kind = "platt"

    def __post_init__(self):
        if not (np.isfinite(self.A) and np.isfinite(self.B)):
            raise ValueError("Platt parameters must be finite")

    def predict(self, scores) -> np.ndarray:
        z = self.A * np.asarray(scores, dtype=float) + self.B
        return np.exp(-np.logaddexp(0.0, z))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "A": self.A, "B": self.B, "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "PlattModel":
        return cls(float(d["A"]), float(d["B"]), dict(d.get("meta", {})))


def platt_targets(labels, smooth: bool = True) -> np.ndarray:
    y = np.asarray(labels, dtype=float)
    if not smooth:
        return y
    n_pos = y.sum()
    n_neg = y.size - n_pos
    return np.where(y == 1, (n_pos + 1) / (n_pos + 2), 1 / (n_neg + 2))


def platt_objective(A, B, scores, targets) -> float:
    """Negative log-likelihood of the targets under ``sigmoid(-(A s + B))``."""
    z = A * np.asarray(scores, dtype=float) + B
    # -log p = log(1 + e^z), -log(1 - p) = log(1 + e^-z)
    return float(np.sum(targets * np.logaddexp(0, z) + (1 - targets) * np.logaddexp(0, -z)))


def platt_gradient(A, B, scores, targets) -> np.ndarray:
    s = np.asarray(scores, dtype=float)
    p = np.exp(-np.logaddexp(0.0, A * s + B))
    r = targets - p
    return np.array([np.dot(r, s), r.sum()])


def fit_platt(scores, labels, max_iter: int = 100, tol: float = 1e-8,
              smooth: bool = True) -> PlattModel:
    """Fit ``A, B`` by Newton's method with backtracking line search.

    Stops when the gradient norm of :func:`platt_objective` is at most
    ``tol``, or when the Newton step no longer moves the parameters in
    floating point (the gradient of a long sum has a round-off floor). If
    every score is identical the slope is unidentifiable; the
    fit then fixes ``A = 0`` and matches ``B`` to the mean target, and
    records ``degenerate=True`` in the model metadata.
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=float)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("Platt scaling needs both classes")
    t = platt_targets(y, smooth)
    meta = {"smooth": smooth, "n": int(s.size)}
    if np.all(s == s[0]):
        tbar = float(t.mean())
        return PlattModel(0.0, float(np.log((1 - tbar) / tbar)), dict(meta, degenerate=True))

    n_pos = y.sum()
    A, B = 0.0, float(np.log((y.size - n_pos + 1) / (n_pos + 1)))
    F = platt_objective(A, B, s, t)
    for it in range(max_iter):
        g = platt_gradient(A, B, s, t)
        if np.hypot(*g) <= tol:
            return PlattModel(A, B, dict(meta, iterations=it, degenerate=False))
        p = np.exp(-np.logaddexp(0.0, A * s + B))
        d = p * (1 - p)
        H = np.array([[np.dot(d, s * s), np.dot(d, s)], [np.dot(d, s), d.sum()]])
        H += 1e-12 * np.eye(2)
        step = -np.linalg.solve(H, g)
        if np.max(np.abs(step)) <= 4 * np.finfo(float).eps * (1.0 + max(abs(A), abs(B))):
            return PlattModel(A, B, dict(meta, iterations=it, degenerate=False))
        lam = 1.0
        while lam >= 1e-10:
            A1, B1 = A + lam * step[0], B + lam * step[1]
            F1 = platt_objective(A1, B1, s, t)
            if F1 <= F + 1e-4 * lam * float(g @ step):
                break
            lam /= 2
        else:
            # no sufficient decrease left at machine precision
            if np.hypot(*g) <= max(tol, 1e3 * np.finfo(float).eps * max(1.0, F)):
                return PlattModel(A, B, dict(meta, iterations=it, degenerate=False))
            raise ConvergenceError("line search failed", (A, B))
        A, B, F = A1, B1, F1
    g = platt_gradient(A, B, s, t)
    if np.hypot(*g) <= tol:
        return PlattModel(A, B, dict(meta, iterations=max_iter, degenerate=False))
    raise ConvergenceError(f"no convergence in {max_iter} iterations", (A, B))

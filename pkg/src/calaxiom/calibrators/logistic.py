"""Base scorers: an L2-regularised logistic model, or scores read from a file."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..core import read_score_file
from .platt import ConvergenceError


@dataclass(frozen=True)
class LogisticScorer:
    """Linear score ``w . (x - mean) / scale + b`` on standardised features.

    ``score`` returns the linear score (log-odds); ``predict`` its sigmoid.
    """

    weights: np.ndarray
    intercept: float
    mean: np.ndarray
    scale: np.ndarray
    meta: dict = field(default_factory=dict)

    kind = "logistic"

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.weights.size:
            raise ValueError(f"expected {self.weights.size} features, got {X.shape[1]}")
        return ((X - self.mean) / self.scale) @ self.weights + self.intercept

    def predict(self, X) -> np.ndarray:
        return np.exp(-np.logaddexp(0.0, -self.score(X)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "weights": self.weights.tolist(), "intercept": self.intercept,
                "mean": self.mean.tolist(), "scale": self.scale.tolist(), "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticScorer":
        return cls(np.array(d["weights"], dtype=float), float(d["intercept"]),
                   np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float),
                   dict(d.get("meta", {})))


@dataclass(frozen=True)
class ExternalScorer:
    """Precomputed scores bound to row indices of one dataset."""

    scores: np.ndarray
    source: str = ""

    kind = "external"

    @classmethod
    def from_csv(cls, path) -> "ExternalScorer":
        return cls(read_score_file(path), str(path))

    def score(self, rows) -> np.ndarray:
        return self.scores[np.asarray(rows, dtype=np.intp)]


def logistic_objective(theta, Z, y, l2):
    w, b = theta[:-1], theta[-1]
    z = Z @ w + b
    loss = np.sum(np.logaddexp(0.0, z) - y * z) / y.size + 0.5 * l2 * (w @ w)
    p = np.exp(-np.logaddexp(0.0, -z))
    grad = np.append(Z.T @ (p - y) / y.size + l2 * w, np.mean(p - y))
    return loss, grad


def fit_base_scorer(X, y, l2: float = 1e-2, tol: float = 1e-8, max_iter: int = 1000,
                    seed: int = 0) -> LogisticScorer:
    """Fit the logistic base model with L-BFGS until the gradient norm is below ``tol``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise ValueError("base scorer needs both classes")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    res = minimize(logistic_objective, np.zeros(X.shape[1] + 1), args=(Z, y, l2), jac=True,
                   method="L-BFGS-B", options={"gtol": tol, "maxiter": max_iter, "ftol": 0.0})
    gnorm = float(np.linalg.norm(res.jac))
    if gnorm > max(tol, 1e-6):
        raise ConvergenceError(f"logistic fit stopped with gradient norm {gnorm:.3g}", res.x)
    return LogisticScorer(res.x[:-1].copy(), float(res.x[-1]), mean, scale,
                          {"l2": l2, "seed": seed, "grad_norm": gnorm})

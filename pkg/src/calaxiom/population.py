"""Exact population-level measures on a finite distribution.

All sums are carried out in rational arithmetic on the (dyadic) float inputs
and rounded once at the end, so that identities such as ``CE_p = 0`` after
average label assignment hold bit-for-bit rather than to a tolerance.
Cell masses are normalised by their exact total, which differs from one by
at most a few ulps after the constructor's renormalisation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import DiscreteDistribution, ScoreTable

__all__ = [
    "Cell", "ValidityCurve", "cell_stats", "ce_p", "classification_loss", "bayes_loss",
    "mse", "pc", "probabilistic_count", "kendall_tau", "discordant_mass",
    "validity_curve", "auc_v", "is_calibrated", "is_strictly_monotonic",
    "best_threshold", "admits_optimal_threshold",
]


@dataclass(frozen=True)
class Cell:
    """One level set of a predictor: its score, exact mass and exact eta mass."""

    score: float
    mass: Fraction
    eta_mass: Fraction
    members: tuple

    @property
    def mean_eta(self) -> float:
        """Conditional label probability in the cell, correctly rounded."""
        return float(self.eta_mass / self.mass)


def _fractions(values) -> list[Fraction]:
    return [Fraction(float(v)) for v in values]


def cell_stats(dist: DiscreteDistribution, f: ScoreTable) -> list[Cell]:
    """Cells of ``f`` in ascending score order."""
    scores = f.on(dist)
    w = _fractions(dist.weights)
    total = sum(w)
    w = [x / total for x in w]
    e = _fractions(dist.etas)
    groups: dict[float, list[int]] = {}
    for i, s in enumerate(scores.tolist()):
        groups.setdefault(s, []).append(i)
    out = []
    for s in sorted(groups):
        idx = groups[s]
        out.append(Cell(s, sum(w[i] for i in idx), sum(w[i] * e[i] for i in idx), tuple(idx)))
    return out


def ce_p(dist: DiscreteDistribution, f: ScoreTable, p: float = 1) -> float:
    """L_p expected calibration error.

    ``(sum_c w_c |s_c - eta_c|^p)^(1/p)`` over the cells of ``f``, where
    ``eta_c`` is the mass-weighted mean regression value in cell ``c``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p!r}")
    cs = cell_stats(dist, f)
    if float(p).is_integer():
        p = int(p)
        inner = sum(c.mass * Fraction(abs(c.score - c.mean_eta)) ** p for c in cs)
        return float(inner) ** (1.0 / p) if p > 1 else float(inner)
    inner = math.fsum(float(c.mass) * abs(c.score - c.mean_eta) ** p for c in cs)
    return inner ** (1.0 / p)


def classification_loss(dist: DiscreteDistribution, f: ScoreTable, theta: float = 0.5) -> float:
    """Expected 0/1 loss of the classifier ``1{f(x) >= theta}``."""
    cs = cell_stats(dist, f)
    loss = sum((c.mass - c.eta_mass) if c.score >= theta else c.eta_mass for c in cs)
    return float(loss)


def bayes_loss(dist: DiscreteDistribution) -> float:
    w = _fractions(dist.weights)
    total = sum(w)
    return float(sum(wi * min(Fraction(e), 1 - Fraction(e)) for wi, e in zip(w, dist.etas)) / total)


def mse(dist: DiscreteDistribution, f: ScoreTable) -> float:
    """Expected squared error ``E[(y - f(x))^2]`` with the label expectation taken exactly."""
    s = _fractions(f.on(dist))
    w = _fractions(dist.weights)
    total = sum(w)
    e = _fractions(dist.etas)
    acc = sum(wi * (ei * (1 - si) ** 2 + (1 - ei) * si ** 2) for wi, ei, si in zip(w, e, s))
    return float(acc / total)


def probabilistic_count(masses) -> float:
    """Inverse collision probability ``1 / sum(m_i^2)`` of raw cell masses.

    The masses are used as given (no renormalisation); pass
    :class:`fractions.Fraction` values for an exact rational result.
    """
    masses = [m if isinstance(m, Fraction) else Fraction(m) for m in masses]
    if not masses or any(m <= 0 for m in masses):
        raise ValueError("cell masses must be positive")
    return float(1 / sum(m * m for m in masses))


def pc(dist: DiscreteDistribution, f: ScoreTable) -> float:
    """Probabilistic count of ``f``: lies in ``[1, |range|]``."""
    return probabilistic_count([c.mass for c in cell_stats(dist, f)])


def discordant_mass(dist: DiscreteDistribution, f: ScoreTable) -> Fraction:
    """``P[(eta(x) - eta(x')) (f(x) - f(x')) < 0]`` over independent ``x, x'``, exact."""
    s = f.on(dist)
    e = dist.etas
    disc = ((e[:, None] - e[None, :]) * (s[:, None] - s[None, :])) < 0
    w = _fractions(dist.weights)
    total = sum(w)
    acc = Fraction(0)
    for i in range(len(w)):
        row = np.flatnonzero(disc[i])
        if row.size:
            acc += w[i] * sum(w[j] for j in row)
    return acc / (total * total)


def kendall_tau(dist: DiscreteDistribution, f: ScoreTable) -> float:
    """Probabilistic Kendall's tau between ``f`` and the regression function.

    Pairs tied in either ``eta`` or ``f`` are never discordant. The
    probability is conditioned on the two draws being distinct points.
    """
    if len(dist) < 2:
        raise ValueError("Kendall's tau needs at least two support points")
    w = _fractions(dist.weights)
    total = sum(w)
    distinct = 1 - sum(x * x for x in w) / (total * total)
    return float(1 - 2 * discordant_mass(dist, f) / distinct)


@dataclass(frozen=True)
class ValidityCurve:
    """Right-continuous step function ``eps -> P[|f - E[y | f]| <= eps]`` on ``[0, 1]``.

    ``breakpoints`` holds ``(eps, value)`` pairs; the value holds from its
    ``eps`` up to the next breakpoint. The first breakpoint is at 0 and the
    value is 1 from the last one onwards.
    """

    breakpoints: tuple

    def __call__(self, eps: float) -> float:
        value = 0.0
        for x, v in self.breakpoints:
            if eps >= x:
                value = v
            else:
                break
        return value

    def area(self) -> float:
        """Exact integral over ``[0, 1]``."""
        pts = [(Fraction(x), Fraction(v)) for x, v in self.breakpoints]
        acc = Fraction(0)
        for (x0, v0), (x1, _) in zip(pts, pts[1:] + [(Fraction(1), None)]):
            acc += v0 * (x1 - x0)
        return float(acc)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epsilon", "value"])
            for x, v in self.breakpoints:
                writer.writerow([repr(float(x)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "ValidityCurve":
        with open(path, newline="") as fh:
            return cls(tuple((float(r["epsilon"]), float(r["value"])) for r in csv.DictReader(fh)))

    @classmethod
    def from_errors(cls, errors, masses=None) -> "ValidityCurve":
        """Curve of a (weighted) collection of pointwise errors in ``[0, 1]``."""
        errors = [float(x) for x in errors]
        if masses is None:
            masses = [Fraction(1)] * len(errors)
        masses = [m if isinstance(m, Fraction) else Fraction(m) for m in masses]
        total = sum(masses)
        acc: dict[float, Fraction] = {}
        for x, m in zip(errors, masses):
            acc[x] = acc.get(x, Fraction(0)) + m
        bps = []
        running = Fraction(0)
        for x in sorted(acc):
            running += acc[x]
            bps.append((x, running / total))
        if bps[0][0] > 0:
            bps.insert(0, (0.0, Fraction(0)))
        return cls(tuple((x, float(v)) for x, v in bps))


def _cell_errors(dist, f):
    cs = cell_stats(dist, f)
    if any(not 0.0 <= c.score <= 1.0 for c in cs):
        raise ValueError("validity curve needs scores in [0, 1]")
    return cs, [abs(c.score - c.mean_eta) for c in cs]


def validity_curve(dist: DiscreteDistribution, f: ScoreTable) -> ValidityCurve:
    cs, errs = _cell_errors(dist, f)
    return ValidityCurve.from_errors(errs, [c.mass for c in cs])


def auc_v(dist: DiscreteDistribution, f: ScoreTable) -> float:
    """Area under the validity curve; equals ``1 - ce_p(dist, f, 1)``."""
    cs, errs = _cell_errors(dist, f)
    # Integrate in exact arithmetic straight from the cell errors so the
    # cumulative values are not rounded before integration.
    total = sum(c.mass for c in cs)
    return float(sum(c.mass * (1 - Fraction(x)) for c, x in zip(cs, errs)) / total)


def is_calibrated(dist: DiscreteDistribution, f: ScoreTable, tol: float = 1e-12) -> bool:
    return all(abs(c.score - c.mean_eta) <= tol for c in cell_stats(dist, f))


def is_strictly_monotonic(dist: DiscreteDistribution, f: ScoreTable) -> bool:
    """True iff ``eta(x) < eta(x')`` always forces ``f(x) < f(x')`` on the support."""
    s = f.on(dist)
    levels = np.unique(dist.etas)
    lo = [s[dist.etas == v].min() for v in levels]
    hi = [s[dist.etas == v].max() for v in levels]
    return all(h < l for h, l in zip(hi[:-1], lo[1:]))


def best_threshold(dist: DiscreteDistribution, f: ScoreTable) -> tuple[float, float]:
    """Threshold minimising the 0/1 loss of ``1{f >= theta}``, and that loss.

    The loss is piecewise constant in theta, so scanning the midpoints
    between consecutive distinct scores plus the two infinite sentinels is
    exhaustive. Ties keep the lowest threshold.
    """
    cs = cell_stats(dist, f)
    # cut k: cells[:k] predicted 0, cells[k:] predicted 1
    loss = sum(c.mass - c.eta_mass for c in cs)
    best_k, best = 0, loss
    for k, c in enumerate(cs, start=1):
        loss += c.eta_mass - (c.mass - c.eta_mass)
        if loss < best:
            best_k, best = k, loss
    if best_k == 0:
        theta = -math.inf
    elif best_k == len(cs):
        theta = math.inf
    else:
        a, b = cs[best_k - 1].score, cs[best_k].score
        theta = (a + b) / 2
        if not a < theta <= b:
            theta = b
    return theta, float(best)


def admits_optimal_threshold(dist: DiscreteDistribution, f: ScoreTable, tol: float = 1e-12) -> bool:
    return best_threshold(dist, f)[1] - bayes_loss(dist) <= tol

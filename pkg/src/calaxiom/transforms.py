"""Predictor transforms: cell merging, average label assignment, thresholding,
and the calibrated-and-accurate alternative to the regression function.
"""

from __future__ import annotations

from fractions import Fraction

from .core import DiscreteDistribution, ScoreTable
from .population import cell_stats


class NotInRangeError(ValueError):
    """A merge value is not attained by the predictor on the support."""


def merge_cells(dist: DiscreteDistribution, f: ScoreTable, r1: float, r2: float,
                score: float | None = None) -> ScoreTable:
    """Fuse the cells ``f^-1(r1)`` and ``f^-1(r2)`` under one score.

    Parameters
    ----------
    dist, f
        Distribution and predictor.
    r1, r2 : float
        Two values in the effective range of ``f``.
    score : float, optional
        Score for the merged cell. ``None`` (default) uses the mass-weighted
        average of ``r1`` and ``r2``. An explicit score may coincide with a
        third cell's value, in which case that cell joins the merge.

    Returns
    -------
    ScoreTable
        ``f`` unchanged when ``r1 == r2``.
    """
    cs = {c.score: c for c in cell_stats(dist, f)}
    for r in (r1, r2):
        if r not in cs:
            raise NotInRangeError(f"{r!r} is not in the effective range")
    if r1 == r2:
        return f
    if score is None:
        a, b = cs[r1], cs[r2]
        score = float((Fraction(r1) * a.mass + Fraction(r2) * b.mass) / (a.mass + b.mass))
    merged = dict(f.entries)
    for pid in dist.ids:
        if merged[pid] == r1 or merged[pid] == r2:
            merged[pid] = float(score)
    return ScoreTable(merged)


def average_label_assignment(dist: DiscreteDistribution, f: ScoreTable) -> ScoreTable:
    """Replace each cell's score by its exact conditional label mean.

    Cells whose means round to the same float end up as one cell of the
    result; this makes the operation idempotent.
    """
    out = dict(f.entries)
    for c in cell_stats(dist, f):
        v = c.mean_eta
        for i in c.members:
            out[dist.ids[i]] = v
    return ScoreTable(out)


def threshold(f: ScoreTable, theta: float) -> ScoreTable:
    return ScoreTable({k: 1.0 if v >= theta else 0.0 for k, v in f.entries.items()})


def construct_calibrated_accurate_alternative(dist: DiscreteDistribution) -> ScoreTable | None:
    """A calibrated, Bayes-accurate predictor that differs from eta, if one exists.

    Such a predictor exists exactly when the regression function takes at
    least two values below 0.5, or at least two values at or above 0.5.
    Two same-side level sets of eta are merged to their joint label mean;
    the two heaviest qualifying level sets are used, and when both sides
    qualify the side whose pair is heavier wins (lower side on ties).
    Returns ``None`` when no such predictor exists.
    """
    eta = dist.eta_table()
    levels = cell_stats(dist, eta)
    below = [c for c in levels if c.score < 0.5]
    above = [c for c in levels if c.score >= 0.5]
    best = None
    for side in (below, above):
        if len(side) < 2:
            continue
        pair = sorted(side, key=lambda c: (-c.mass, c.score))[:2]
        mass = pair[0].mass + pair[1].mass
        if best is None or mass > best[0]:
            best = (mass, pair)
    if best is None:
        return None
    a, b = best[1]
    value = float((a.eta_mass + b.eta_mass) / (a.mass + b.mass))
    out = dict(eta.entries)
    for i in a.members + b.members:
        out[dist.ids[i]] = value
    return ScoreTable(out)

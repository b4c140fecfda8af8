"""Property checks for the population engine.

:func:`run_property_suites` draws seeded random discrete distributions and
checks the merge, averaging, counting, validity-curve and monotonicity
properties on each. :func:`pinned_checks` evaluates the small hand-built
instances whose values are known in closed form. Both return a list of
human-readable violations, empty when everything holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import DiscreteDistribution, ScoreTable, effective_range
from .population import (admits_optimal_threshold, auc_v, ce_p, cell_stats,
                         classification_loss, is_calibrated, is_strictly_monotonic,
                         kendall_tau, mse, pc, probabilistic_count)
from .transforms import average_label_assignment, merge_cells

# floats rounded from exact merge scores can move a metric by a few ulps
SLACK = 1e-12
ETA_GRID = np.round(np.linspace(0.0, 1.0, 11), 2)
SCORE_GRID = np.array([0.0, 0.2, 0.25, 0.4, 0.5, 0.6, 0.75, 0.8, 1.0])
P_VALUES = (1, 2, 4)
SUITES = "abcdefg"


@dataclass
class Instance:
    dist: DiscreteDistribution
    f: ScoreTable
    rng: np.random.Generator = field(repr=False)


def random_instance(rng: np.random.Generator, max_points: int = 20) -> Instance:
    """Random support of 2 to ``max_points`` points with scores from a small grid.

    A quarter of the instances use equal point weights, and a quarter score
    points by a strictly increasing map of eta, so the equality and
    monotonic branches of the properties are exercised.
    """
    n = int(rng.integers(2, max_points + 1))
    etas = rng.choice(ETA_GRID, size=n)
    if rng.random() < 0.25:
        weights = np.ones(n)
    else:
        weights = rng.integers(1, 11, size=n).astype(float)
    dist = DiscreteDistribution(range(n), weights / weights.sum(), etas)
    mode = rng.random()
    if mode < 0.25:
        levels = np.unique(etas)
        lifted = np.sort(rng.choice(SCORE_GRID.size + 8, size=levels.size, replace=False))
        value = dict(zip(levels, (lifted + 1) / (SCORE_GRID.size + 9)))
        scores = np.array([value[e] for e in etas])
    else:
        scores = rng.choice(SCORE_GRID[: int(rng.integers(2, SCORE_GRID.size + 1))], size=n)
    return Instance(dist, dist.score_table(scores), rng)


def _check_merges(inst: Instance) -> list[str]:
    d, f, rng = inst.dist, inst.f, inst.rng
    out = []
    rng_vals = sorted(effective_range(d, f))
    if len(rng_vals) < 2:
        return out
    r1, r2 = (float(v) for v in rng.choice(rng_vals, size=2, replace=False))
    g = merge_cells(d, f, r1, r2)
    if pc(d, g) > pc(d, f) + SLACK:
        out.append(f"(a) averaged merge raised pc: {pc(d, f)} -> {pc(d, g)}")
    for p in P_VALUES:
        if ce_p(d, g, p) > ce_p(d, f, p) + SLACK:
            out.append(f"(a) averaged merge raised ce_{p}: {ce_p(d, f, p)} -> {ce_p(d, g, p)}")
    pool = list(SCORE_GRID) + [float(rng.random())]
    r = float(pool[int(rng.integers(len(pool)))])
    h = merge_cells(d, f, r1, r2, score=r)
    if pc(d, h) > pc(d, f) + SLACK:
        out.append(f"(b) merge to score {r} raised pc: {pc(d, f)} -> {pc(d, h)}")
    return out


def _check_averaging(inst: Instance) -> list[str]:
    d, f = inst.dist, inst.f
    out = []
    fbar = average_label_assignment(d, f)
    for p in P_VALUES:
        if ce_p(d, fbar, p) != 0.0:
            out.append(f"(c) ce_{p} after averaging is {ce_p(d, fbar, p)!r}, not 0")
    if mse(d, fbar) > mse(d, f) + SLACK:
        out.append(f"(c) averaging raised mse: {mse(d, f)} -> {mse(d, fbar)}")
    if classification_loss(d, fbar, 0.5) > classification_loss(d, f, 0.5) + SLACK:
        out.append("(c) averaging raised classification loss at 0.5")
    if pc(d, fbar) > pc(d, f) + SLACK:
        out.append(f"(c) averaging raised pc: {pc(d, f)} -> {pc(d, fbar)}")
    return out


def _check_count(inst: Instance) -> list[str]:
    d, f = inst.dist, inst.f
    masses = [c.mass for c in cell_stats(d, f)]
    value, size = pc(d, f), len(masses)
    out = []
    if value > size + 1e-9:
        out.append(f"(d) pc {value} exceeds range size {size}")
    # exact: 1 / sum(m^2) == |range| holds iff all cell masses are equal
    exact = 1 / sum(m * m for m in masses) / sum(masses) ** -2
    equal = all(m == masses[0] for m in masses)
    if equal != (exact == size):
        out.append(f"(d) pc {value} vs size {size}, equal cell weights: {equal}")
    return out


def _check_validity(inst: Instance) -> list[str]:
    d, f = inst.dist, inst.f
    a, c = auc_v(d, f), ce_p(d, f, 1)
    if abs(a - (1 - c)) > 1e-12:
        return [f"(e) auc_v {a!r} != 1 - ce_1 {1 - c!r}"]
    return []


def _check_monotonic(inst: Instance) -> list[str]:
    d, f = inst.dist, inst.f
    if not is_strictly_monotonic(d, f):
        return []
    out = []
    if not admits_optimal_threshold(d, f):
        out.append("(f) strictly monotonic predictor without an optimal threshold")
    differs = any(f[pid] != e for pid, e in zip(d.ids, d.etas))
    if differs and is_calibrated(d, f):
        out.append("(g) strictly monotonic predictor different from eta is calibrated")
    return out


_SUITE_FNS = {"ab": _check_merges, "c": _check_averaging, "d": _check_count,
              "e": _check_validity, "fg": _check_monotonic}


def run_property_suites(n_instances: int = 1000, seed: int = 0, max_points: int = 20,
                        suites: str = SUITES) -> list[str]:
    """Run the selected property suites on ``n_instances`` seeded random instances."""
    rng = np.random.default_rng(seed)
    violations = []
    for i in range(n_instances):
        inst = random_instance(rng, max_points)
        for tags, fn in _SUITE_FNS.items():
            if any(t in suites for t in tags):
                violations += [f"instance {i}: {v}" for v in fn(inst) if v[1] in suites]
    return violations


def _table(values) -> tuple[DiscreteDistribution, ScoreTable]:
    """Distribution and predictor from ``(weight, eta, score)`` triples."""
    w, e, s = zip(*values)
    d = DiscreteDistribution(range(len(w)), w, e)
    return d, d.score_table(s)


# weight profiles of the worked count examples; the second sums to 21/20
PC_PROFILES = {
    "equal-8": ([Fraction(1, 8)] * 8, 8.0),
    "mixed-9": ([Fraction(1, 4)] * 3 + [Fraction(19, 80)] + [Fraction(1, 80)] * 5, 3200 / 783),
    "three": ([Fraction(1, 4), Fraction(1, 4), Fraction(1, 2)], 8 / 3),
    "thirds-12": ([Fraction(1, 3)] * 2 + [Fraction(1, 30)] * 10, 30 / 7),
    "thirds-21": ([Fraction(1, 3)] + [Fraction(1, 30)] * 20, 7.5),
}


def pc_profile_values() -> dict[str, tuple[float, float]]:
    """``name -> (computed, expected)``; expected values are closed forms."""
    return {k: (probabilistic_count(m), want) for k, (m, want) in PC_PROFILES.items()}


def kt_averaging_instances():
    """Two 8-point instances with cells ``a`` (score 0.3) and ``b`` (score 0.7).

    Returns ``[(dist, f, kt_before, kt_after)]`` with exact expected values.
    """
    out = []
    for a_etas, before, after in (((0.1, 0.1, 0.1, 1.0), Fraction(5, 7), Fraction(1, 7)),
                                  ((0.1, 0.3, 0.3, 1.0), Fraction(1, 7), Fraction(5, 7))):
        d, f = _table([(1 / 8, e, 0.3) for e in a_etas] + [(1 / 8, 0.2, 0.7)] * 4)
        out.append((d, f, before, after))
    return out


def merge_witnesses():
    """Averaged-merge instances where a metric goes up, down, or stays level.

    Returns ``{metric: {"increase"|"decrease"|"equal": (dist, f, r1, r2)}}``.
    """
    def closs(eta_a):
        # light cells a, b; heavy cells c (eta 0) and d (eta 1) pin theta = 0.5
        cells = [(0.1, eta_a, 0.4), (0.1, 0.7, 0.8), (0.4, 0.0, 0.45), (0.4, 1.0, 0.55)]
        return _table(cells) + (0.4, 0.8)

    def sq(eta_a, eta_b):
        return _table([(0.5, eta_a, 0.0), (0.5, eta_b, 1.0)]) + (0.0, 1.0)

    def kt(eta_a, eta_b, eta_c, eta_d):
        return _table([(0.25, eta_a, 0.4), (0.25, eta_b, 0.8),
                       (0.25, eta_c, 0.45), (0.25, eta_d, 0.55)]) + (0.4, 0.8)

    return {
        "classification_loss": {"increase": closs(0.2), "decrease": closs(0.8),
                                "equal": closs(0.5)},
        "mse": {"increase": sq(0.0, 1.0), "decrease": sq(1.0, 0.0), "equal": sq(0.25, 0.75)},
        "kendall_tau": {"decrease": kt(0.1, 0.9, 0.3, 0.6), "increase": kt(0.6, 0.4, 0.1, 0.2),
                        "equal": kt(0.5, 0.5, 0.5, 0.5)},
    }


_METRICS = {"classification_loss": lambda d, f: classification_loss(d, f, 0.5),
            "mse": mse, "kendall_tau": kendall_tau}


def pinned_checks() -> list[str]:
    """Check every pinned construction; returns violations."""
    out = []
    for name, (got, want) in pc_profile_values().items():
        if abs(got - want) > 1e-9:
            out.append(f"pc profile {name}: {got!r} != {want!r}")
    for i, (d, f, before, after) in enumerate(kt_averaging_instances()):
        fbar = average_label_assignment(d, f)
        if (kendall_tau(d, f), kendall_tau(d, fbar)) != (float(before), float(after)):
            out.append(f"kt averaging instance {i}: {kendall_tau(d, f)} -> "
                       f"{kendall_tau(d, fbar)}, expected {before} -> {after}")
    for metric, cases in merge_witnesses().items():
        fn = _METRICS[metric]
        for direction, (d, f, r1, r2) in cases.items():
            old, new = fn(d, f), fn(d, merge_cells(d, f, r1, r2))
            ok = {"increase": new > old, "decrease": new < old, "equal": new == old}[direction]
            if not ok:
                out.append(f"{metric} merge witness '{direction}': {old!r} -> {new!r}")
    return out

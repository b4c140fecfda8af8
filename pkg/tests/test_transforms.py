from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from calaxiom.core import DiscreteDistribution, effective_range
from calaxiom.population import (admits_optimal_threshold, ce_p, classification_loss,
                                 is_calibrated, mse, pc)
from calaxiom.transforms import (NotInRangeError, average_label_assignment,
                                 construct_calibrated_accurate_alternative, merge_cells,
                                 threshold)

from strategies import cells_oracle, instances


def test_merge_averages_by_mass():
    d = DiscreteDistribution([0, 1, 2], [0.1, 0.1, 0.8], [0.3, 0.6, 0.5])
    f = d.score_table([0.4, 0.8, 0.45])
    g = merge_cells(d, f, 0.4, 0.8)
    assert [g[i] for i in d.ids] == [pytest.approx(0.6, abs=1e-15)] * 2 + [0.45]
    assert merge_cells(d, f, 0.4, 0.4) is f


def test_merge_equal_weight_extremes():
    d = DiscreteDistribution.uniform([0.0, 1.0])
    g = merge_cells(d, d.score_table([0.0, 1.0]), 0.0, 1.0)
    assert g[0] == g[1] == 0.5


def test_merge_rejects_values_outside_range():
    d = DiscreteDistribution.uniform([0.0, 1.0])
    with pytest.raises(NotInRangeError):
        merge_cells(d, d.eta_table(), 0.0, 0.7)


def test_explicit_merge_can_join_a_third_cell():
    d = DiscreteDistribution.uniform([0.1, 0.2, 0.3])
    g = merge_cells(d, d.eta_table(), 0.1, 0.2, score=0.3)
    assert effective_range(d, g) == {0.3}


@given(instances(min_points=2), st.data())
def test_merges_never_raise_pc_or_ce(inst, data):
    d, f = inst
    vals = sorted(effective_range(d, f))
    assume(len(vals) >= 2)
    r1, r2 = data.draw(st.sampled_from(vals)), data.draw(st.sampled_from(vals))
    g = merge_cells(d, f, r1, r2)
    assert pc(d, g) <= pc(d, f) + 1e-12
    for p in (1, 2, 3):
        assert ce_p(d, g, p) <= ce_p(d, f, p) + 1e-12
    h = merge_cells(d, f, r1, r2, score=data.draw(st.floats(0, 1)))
    assert pc(d, h) <= pc(d, f) + 1e-12


def test_average_label_assignment_example():
    etas = [0.1, 0.1, 0.1, 1.0, 0.2, 0.2, 0.2, 0.2]
    d = DiscreteDistribution.uniform(etas)
    fbar = average_label_assignment(d, d.score_table([0.3] * 4 + [0.7] * 4))
    assert fbar[0] == 0.325 and fbar[7] == 0.2


@given(instances())
def test_average_label_assignment_matches_oracle(inst):
    d, f = inst
    cs = cells_oracle(d, f)
    fbar = average_label_assignment(d, f)
    for pid in d.ids:
        m, em = cs[f[pid]]
        assert fbar[pid] == float(em / m)


@given(instances())
def test_average_label_assignment_theorem(inst):
    d, f = inst
    fbar = average_label_assignment(d, f)
    for p in (1, 2, 4):
        assert ce_p(d, fbar, p) == 0.0
    assert mse(d, fbar) <= mse(d, f) + 1e-12
    assert classification_loss(d, fbar) <= classification_loss(d, f) + 1e-12
    assert pc(d, fbar) <= pc(d, f) + 1e-12
    assert average_label_assignment(d, fbar) == fbar


def test_calibrated_predictor_is_a_fixed_point():
    d = DiscreteDistribution.uniform([0.2, 0.4, 0.4])
    assert average_label_assignment(d, d.eta_table()) == d.eta_table()


def test_threshold():
    d = DiscreteDistribution.uniform([0.1, 0.9])
    f = d.score_table([0.4, 0.6])
    assert [threshold(f, 0.5)[i] for i in d.ids] == [0.0, 1.0]
    assert [threshold(f, 0.0)[i] for i in d.ids] == [1.0, 1.0]
    assert [threshold(f, 0.7)[i] for i in d.ids] == [0.0, 0.0]


def test_constructor_examples():
    d = DiscreteDistribution.uniform([0.1, 0.3, 0.8])
    f = construct_calibrated_accurate_alternative(d)
    assert [f[i] for i in d.ids] == [pytest.approx(0.2, abs=1e-15)] * 2 + [0.8]
    for etas in ([0.3] * 3, [0.4, 0.6]):
        assert construct_calibrated_accurate_alternative(DiscreteDistribution.uniform(etas)) is None


@given(instances(min_points=1, max_points=12))
def test_constructor_properties(inst):
    d, _ = inst
    levels = set(d.etas.tolist())
    eligible = (len({e for e in levels if e < 0.5}) >= 2
                or len({e for e in levels if e >= 0.5}) >= 2)
    f = construct_calibrated_accurate_alternative(d)
    assert (f is not None) == eligible
    if f is not None:
        assert is_calibrated(d, f)
        assert admits_optimal_threshold(d, f)
        changed = sum(Fraction(float(w)) for pid, w, e in zip(d.ids, d.weights, d.etas)
                      if f[pid] != e)
        assert changed > 0
        assert np.all([(f[pid] < 0.5) == (e < 0.5) for pid, e in zip(d.ids, d.etas)])

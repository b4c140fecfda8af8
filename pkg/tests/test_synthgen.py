import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calaxiom.core import LabeledDataset
from calaxiom.population import bayes_loss
from calaxiom.synthgen import (PRESETS, grid_cells, make_cell_generator, make_generator,
                               make_smooth_generator)


def halves(eta_a, eta_b, seed=0):
    return make_cell_generator({"d": 1, "cells": [
        {"low": [0.0], "high": [0.5], "eta": eta_a, "weight": 0.5},
        {"low": [0.5], "high": [1.0], "eta": eta_b, "weight": 0.5}]}, seed)


def test_bayes_loss_of_induced_cell_distribution():
    assert bayes_loss(halves(0.0, 1.0).to_discrete()) == 0.0
    assert bayes_loss(halves(0.5, 0.5).to_discrete()) == 0.5


def test_cell_label_means_within_three_sigma():
    gen = make_generator("cells20", seed=1)
    ds = gen.sample(10_000)
    cell = gen.cell_of(ds.X)
    assert np.all(cell >= 0)
    assert np.array_equal(gen.eta(ds.X), ds.eta)
    for i, box in enumerate(gen.boxes):
        n = np.sum(cell == i)
        if n == 0:
            continue
        sigma = np.sqrt(box.eta * (1 - box.eta) / n)
        assert abs(ds.y[cell == i].mean() - box.eta) <= 3 * sigma + 1e-12


def test_cell_generator_validation():
    good = {"low": [0.0], "high": [0.6], "eta": 0.2, "weight": 0.5}
    with pytest.raises(ValueError, match="overlap"):
        make_cell_generator({"d": 1, "cells": [
            good, {"low": [0.5], "high": [1.0], "eta": 0.3, "weight": 0.5}]})
    bad = [
        {"d": 1, "cells": [dict(good, weight=0.7), dict(good, low=[0.6], high=[1.0])]},
        {"d": 1, "cells": [dict(good, eta=1.5, weight=1.0)]},
        {"d": 1, "cells": [dict(good, low=[0.6], weight=1.0)]},
        {"d": 2, "cells": [dict(good, weight=1.0)]},
        {"d": 1, "cells": []},
    ]
    for spec in bad:
        with pytest.raises(ValueError):
            make_cell_generator(spec)


def test_eta_outside_cells_is_an_error():
    with pytest.raises(ValueError):
        halves(0.2, 0.8).eta([[1.5]])


def test_grid_cells_weights_sum_to_one_and_tile_the_square():
    spec = grid_cells((3, 2), seed=4)
    gen = make_cell_generator(spec)
    assert len(gen.boxes) == 6
    g = np.linspace(0.01, 0.99, 25)
    X = np.array([[a, b] for a in g for b in g])
    assert np.all(gen.cell_of(X) >= 0)


def test_smooth_generator_with_zero_coefficients_is_a_coin():
    gen = make_smooth_generator({"d": 3, "coefficients": [0.0] * 10})
    ds = gen.sample(500)
    assert np.all(ds.eta == 0.5)
    with pytest.raises(ValueError):
        make_smooth_generator({"d": 3, "coefficients": [0.0] * 9})


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 1000), st.floats(0.1, 10))
def test_smooth_eta_in_open_unit_interval(d, cseed, scale):
    gen = make_smooth_generator({"d": d, "coefficient_seed": cseed, "scale": scale})
    eta = gen.sample(200).eta
    assert np.all((eta > 0) & (eta < 1))


def test_smooth_label_mean_matches_mean_eta():
    ds = make_generator("synthetic-5", seed=2).sample(10_000)
    # labels are independent Bernoulli(eta_i) given the features
    sigma = np.sqrt(np.sum(ds.eta * (1 - ds.eta))) / ds.eta.size
    assert abs(ds.y.mean() - ds.eta.mean()) <= 3 * sigma


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_sampling_is_deterministic_per_seed_and_key(name):
    a, b = make_generator(name, 3), make_generator(name, 3)
    x, y = a.sample(300, key=(1, 2)), b.sample(300, key=(1, 2))
    assert np.array_equal(x.X, y.X) and np.array_equal(x.y, y.y)
    assert not np.array_equal(x.X, a.sample(300, key=(1, 3)).X)
    assert not np.array_equal(x.X, make_generator(name, 4).sample(300, key=(1, 2)).X)


def test_config_round_trip_and_unknown_inputs():
    gen = make_generator("cells20")
    again = make_generator(gen.to_config())
    assert np.array_equal(gen.sample(50).X, again.sample(50).X)
    smooth = make_generator("synthetic-5")
    assert np.array_equal(make_generator(smooth.to_config()).coefficients, smooth.coefficients)
    with pytest.raises(ValueError):
        make_generator("nope")
    with pytest.raises(ValueError):
        make_generator({"type": "spiral"})


def test_csv_export_keeps_eta(tmp_path):
    ds = make_generator("cells20").sample(40)
    ds.to_csv(tmp_path / "g.csv")
    back = LabeledDataset.from_csv(tmp_path / "g.csv")
    assert back.d == 2
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.eta, ds.eta)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calaxiom.core import (DiscreteDistribution, LabeledDataset, Partition, PartitionError,
                           ScoreTable, SplitSpec, TotalityError, binarize_labels, cells,
                           effective_range, read_score_file, write_score_file)


def test_distribution_validates_weights_and_etas():
    with pytest.raises(ValueError):
        DiscreteDistribution([0, 1], [0.5, 0.6], [0.1, 0.2])
    with pytest.raises(ValueError):
        DiscreteDistribution([0, 1], [1.0, 0.0], [0.1, 0.2])
    with pytest.raises(ValueError):
        DiscreteDistribution([0, 0], [0.5, 0.5], [0.1, 0.2])
    with pytest.raises(ValueError):
        DiscreteDistribution([0, 1], [0.5, 0.5], [0.1, 1.2])


def test_distribution_is_read_only_and_round_trips_json():
    d = DiscreteDistribution(["a", "b", "c"], [0.25, 0.25, 0.5], [0.0, 0.5, 1.0])
    with pytest.raises(ValueError):
        d.weights[0] = 0.3
    assert DiscreteDistribution.from_json(d.to_json()) == d


def test_effective_range_deduplicates():
    d = DiscreteDistribution.uniform([0.1, 0.2, 0.3])
    assert effective_range(d, d.score_table([0.2, 0.2, 0.9])) == {0.2, 0.9}
    assert effective_range(d, d.score_table([0.4] * 3)) == {0.4}
    assert len(effective_range(d, d.score_table([0.1, 0.2, 0.3]))) == 3


def test_missing_id_raises_totality_error():
    d = DiscreteDistribution.uniform([0.1, 0.2])
    with pytest.raises(TotalityError):
        effective_range(d, ScoreTable({0: 0.3}))


def test_cells_group_by_score_with_mass():
    d = DiscreteDistribution([1, 2, 3], [0.25, 0.25, 0.5], [0.1, 0.2, 0.3])
    part = cells(d, d.score_table([0.2, 0.2, 0.9]))
    assert [b.tolist() for b in part.bins] == [[0, 1], [2]]
    assert part.weights.tolist() == [0.5, 0.5]
    assert part.keys == (0.2, 0.9)
    single = cells(d, d.score_table([0.5] * 3))
    assert len(single) == 1 and single.weights[0] == 1.0


def test_partition_rejects_overlap_gaps_and_empty_bins():
    with pytest.raises(PartitionError):
        Partition([[0, 1], [1, 2]])
    with pytest.raises(PartitionError):
        Partition([[0], [2]])
    with pytest.raises(PartitionError):
        Partition([[0, 1], []])


def test_partition_csv_round_trip(tmp_path):
    part = Partition.from_labels([2, 0, 2, 1, 0])
    part.to_csv(tmp_path / "p.csv")
    back = Partition.from_csv(tmp_path / "p.csv")
    assert [b.tolist() for b in back.bins] == [b.tolist() for b in part.bins]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=40))
def test_partition_weights_are_bin_shares(labels):
    part = Partition.from_labels(labels)
    assert math.isclose(math.fsum(part.weights), 1.0, abs_tol=1e-12)
    assert part.n == len(labels)
    assert np.array_equal(np.unique(part.labels(), return_counts=True)[1],
                          np.unique(labels, return_counts=True)[1])


def test_split_spec_defaults_and_disjointness():
    spec = SplitSpec()
    assert (spec.train_frac, spec.calib_frac, spec.test_frac) == (0.405, 0.495, 0.10)
    tr, ca, te = spec.split(1000)
    assert (tr.size, ca.size, te.size) == (405, 495, 100)
    assert np.array_equal(np.sort(np.concatenate([tr, ca, te])), np.arange(1000))
    with pytest.raises(ValueError):
        SplitSpec(0.5, 0.5, 0.1)


@settings(max_examples=30)
@given(st.integers(10, 500), st.integers(0, 2**32 - 1))
def test_split_is_deterministic(n, seed):
    a = SplitSpec(seed=seed).split(n)
    b = SplitSpec(seed=seed).split(n)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_labeled_dataset_csv_round_trip(tmp_path):
    ds = LabeledDataset(np.array([[0.5, 1.0], [2.0, -1.0]]), [1, 0], eta=[0.7, 0.2])
    ds.to_csv(tmp_path / "d.csv")
    back = LabeledDataset.from_csv(tmp_path / "d.csv")
    assert np.array_equal(back.X, ds.X) and np.array_equal(back.y, ds.y)
    assert np.array_equal(back.eta, ds.eta)
    assert back.name == "d"


def test_labeled_dataset_rejects_bad_rows(tmp_path):
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), [0, 2])
    with pytest.raises(ValueError):
        LabeledDataset(np.zeros((2, 2)), [0, 1, 1])
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(KeyError):
        LabeledDataset.from_csv(tmp_path / "x.csv")


def test_binarize_labels():
    assert binarize_labels(["0", "1", "1"]).tolist() == [0, 1, 1]
    assert binarize_labels(["cat", "dog", "dog", "eel"]).tolist() == [0, 1, 1, 0]
    # count ties go to the smaller class name
    assert binarize_labels(["b", "a"]).tolist() == [0, 1]


def test_score_file_round_trip(tmp_path):
    write_score_file(tmp_path / "s.csv", [0.1, 0.7, 1 / 3])
    assert read_score_file(tmp_path / "s.csv").tolist() == [0.1, 0.7, 1 / 3]
    (tmp_path / "bad.csv").write_text("index,score\n0,0.1\n2,0.3\n")
    with pytest.raises(ValueError):
        read_score_file(tmp_path / "bad.csv")

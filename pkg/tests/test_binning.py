import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from calaxiom.binning import bfsl, bfsl_frontier, leaf_partition, uniform_mass
from calaxiom.calibrators import IsotonicModel, grow_tree


@given(arrays(np.float64, st.integers(1, 60), elements=st.sampled_from([0.1, 0.3, 0.5, 0.9])),
       st.data())
def test_uniform_mass_sizes_and_order(s, data):
    B = data.draw(st.integers(1, s.size))
    part = uniform_mass(s, B)
    sizes = [b.size for b in part.bins]
    q, r = divmod(s.size, B)
    assert sizes == [q + 1] * r + [q] * (B - r)
    order = np.argsort(s, kind="stable")
    assert np.array_equal(np.concatenate([np.sort(b) for b in part.bins]),
                          np.concatenate([np.sort(order[a:a + k]) for a, k in
                                          zip(np.cumsum([0] + sizes[:-1]), sizes)]))
    # bins are ordered: every score in bin j is <= every score in bin j+1
    for a, b in zip(part.bins, part.bins[1:]):
        assert s[a].max() <= s[b].min()


def test_uniform_mass_examples_and_errors():
    assert [b.tolist() for b in uniform_mass([0.4, 0.1, 0.3, 0.2], 2).bins] == [[1, 3], [0, 2]]
    assert [b.size for b in uniform_mass(np.zeros(10), 3).bins] == [4, 3, 3]
    for B in (0, 5):
        with pytest.raises(ValueError):
            uniform_mass([0.1, 0.2, 0.3, 0.4], B)


def test_leaf_partition_needs_a_tree():
    with pytest.raises(TypeError):
        leaf_partition(IsotonicModel(np.array([0.0]), np.array([0.5])), np.zeros((2, 1)))


def layers(tree):
    """Frontiers by whole-layer expansion, brute force via node depths."""
    depth = tree.depth()
    out = []
    for k in range(int(depth.max()) + 1):
        out.append(sorted(i for i in range(tree.n_nodes)
                          if depth[i] == k or (depth[i] < k and tree.left[i] < 0)))
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 40))
def test_bfsl_frontier_is_first_layer_with_enough_nodes(seed, B):
    rng = np.random.default_rng(seed)
    X = rng.random((80, 2))
    y = (rng.random(80) < X[:, 0]).astype(int)
    tree = grow_tree(X, y, min_leaf=3)
    frontier = bfsl_frontier(tree, B)
    candidates = [f for f in layers(tree) if len(f) >= B]
    if not candidates:
        assert frontier is None
        with pytest.warns(UserWarning):
            part = bfsl(tree, X, B)
        assert part.fallback and len(part) == tree.n_leaves
    else:
        assert sorted(frontier) == candidates[0]
        part = bfsl(tree, X, B)
        assert not part.fallback and part.n == 80
        node_of = tree.apply(X, stop=frontier)
        assert set(np.unique(node_of)) <= set(frontier)


def test_bfsl_on_a_stump():
    X = np.arange(6.0)[:, None]
    tree = grow_tree(X, [0, 0, 0, 1, 1, 1])
    assert bfsl_frontier(tree, 1) == [0]
    assert sorted(bfsl_frontier(tree, 2)) == [1, 2]
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        assert bfsl(tree, X, 3).fallback

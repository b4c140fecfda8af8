import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from calaxiom.binning import leaf_partition
from calaxiom.calibrators import (TreeModel, collapse_alphas, fit_tree, grow_tree, model_from_json,
                                  model_to_json, prune, pruning_path)
from calaxiom.empirical import ece


@st.composite
def labelled_rows(draw, max_n=40, max_d=3, levels=6):
    n = draw(st.integers(2, max_n))
    d = draw(st.integers(1, max_d))
    X = draw(arrays(np.float64, (n, d), elements=st.integers(0, levels).map(float)))
    y = draw(arrays(np.int64, n, elements=st.integers(0, 1)))
    return X, y


def sse(y):
    return float(np.sum((y - y.mean()) ** 2)) if y.size else 0.0


def brute_force_root_split(X, y, min_leaf):
    """Best (gain, feature, threshold) by trying every cut of every feature."""
    best = None
    parent = sse(y)
    for j in range(X.shape[1]):
        vals = np.unique(X[:, j])
        for a, b in zip(vals[:-1], vals[1:]):
            t = (a + b) / 2
            mask = X[:, j] < t
            if mask.sum() < min_leaf or (~mask).sum() < min_leaf:
                continue
            gain = parent - sse(y[mask]) - sse(y[~mask])
            if best is None or gain > best[0] + 1e-12:
                best = (gain, j, t)
    return best


@given(labelled_rows(), st.integers(1, 3))
def test_root_split_matches_exhaustive_search(data, min_leaf):
    X, y = data
    tree = grow_tree(X, y, min_leaf=min_leaf, max_leaves=2)
    want = brute_force_root_split(X, y, min_leaf)
    if want is None or want[0] <= 1e-12 * max(sse(y), 1.0):
        assert tree.n_leaves == 1
    else:
        assert (tree.feature[0], tree.threshold[0]) == (want[1], want[2])
        gain = tree.sse[0] - tree.sse[tree.left[0]] - tree.sse[tree.right[0]]
        assert gain == pytest.approx(want[0], abs=1e-9)


@given(labelled_rows(), st.integers(1, 4))
def test_leaves_respect_min_leaf_and_score_their_mean(data, min_leaf):
    X, y = data
    tree = grow_tree(X, y, min_leaf=min_leaf)
    leaf_of = tree.apply(X)
    for leaf in np.unique(leaf_of):
        members = y[leaf_of == leaf]
        assert tree.value[leaf] == pytest.approx(members.mean(), abs=1e-15)
        assert members.size >= min_leaf or tree.n_leaves == 1


@given(labelled_rows())
def test_training_ece_on_leaf_bins_is_zero(data):
    X, y = data
    tree = fit_tree(X, y, cv_folds=2 if y.size >= 4 else 0)
    assert ece(tree.predict(X), y, leaf_partition(tree, X)) < 1e-12


def subtree_costs(tree, node, alpha, n_total):
    """Every pruning of the subtree at ``node`` as (cost, leaves)."""
    own = (tree.sse[node] / n_total + alpha, 1)
    if tree.left[node] < 0:
        return [own]
    out = [own]
    for a in subtree_costs(tree, tree.left[node], alpha, n_total):
        for b in subtree_costs(tree, tree.right[node], alpha, n_total):
            out.append((a[0] + b[0], a[1] + b[1]))
    return out


def cost(tree, alpha):
    leaves = tree.leaves()
    return float(tree.sse[leaves].sum()) / tree.count[0] + alpha * leaves.size


@settings(max_examples=60, deadline=None)
@given(labelled_rows(max_n=24, max_d=2, levels=4), st.floats(0, 0.2))
def test_prune_is_optimal_among_all_subtrees(data, alpha):
    X, y = data
    tree = grow_tree(X, y, max_leaves=8)
    options = subtree_costs(tree, 0, alpha, float(tree.count[0]))
    best = min(c for c, _ in options)
    pruned = prune(tree, alpha)
    assert cost(pruned, alpha) == pytest.approx(best, abs=1e-12)
    smallest = min(k for c, k in options if c <= best + 1e-12)
    assert pruned.n_leaves == smallest


@settings(max_examples=40, deadline=None)
@given(labelled_rows(max_n=30))
def test_pruning_path_is_nested(data):
    X, y = data
    tree = grow_tree(X, y)
    alphas = collapse_alphas(tree)
    path = pruning_path(tree, alphas)
    sizes = [prune(tree, a, alphas).n_leaves for a in path]
    assert sizes == sorted(sizes, reverse=True)
    assert prune(tree, math.inf, alphas).n_leaves == 1
    assert prune(tree, path[-1], alphas).n_leaves == 1


def test_fixed_alpha_and_degenerate_inputs():
    X = np.arange(10.0)[:, None]
    y = np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1])
    assert fit_tree(X, y, alpha=math.inf).n_leaves == 1
    perfect = fit_tree(X, y, alpha=0.0)
    assert perfect.n_leaves == 2 and perfect.threshold[0] == 4.5
    assert fit_tree(X, np.zeros(10), cv_folds=5).n_leaves == 1
    with pytest.raises(ValueError):
        fit_tree(X[:1], y[:1], min_leaf=1)


def test_cv_fit_is_deterministic_and_round_trips():
    rng = np.random.default_rng(3)
    X = rng.random((300, 3))
    y = (rng.random(300) < X[:, 0]).astype(int)
    a, b = fit_tree(X, y, seed=7), fit_tree(X, y, seed=7)
    assert model_to_json(a) == model_to_json(b)
    back = model_from_json(model_to_json(a))
    assert isinstance(back, TreeModel)
    assert np.array_equal(back.predict(X), a.predict(X))


def test_max_depth_and_max_leaves_limit_growth():
    rng = np.random.default_rng(0)
    X = rng.random((200, 2))
    y = (rng.random(200) < 0.5).astype(int)
    assert grow_tree(X, y, max_depth=2).depth().max() <= 2
    assert grow_tree(X, y, max_leaves=5).n_leaves <= 5


def test_apply_rejects_wrong_width():
    tree = grow_tree(np.zeros((4, 2)), [0, 1, 0, 1])
    with pytest.raises(ValueError):
        tree.apply(np.zeros((3, 3)))

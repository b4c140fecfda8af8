"""Partition builders for the binned metrics."""

from __future__ import annotations

import warnings

import numpy as np

from .calibrators.tree import TreeModel
from .core import Partition


def uniform_mass(scores, B: int) -> Partition:
    """Equal-count bins over scores sorted by (score, index).

    With ``n = q B + r`` the first ``r`` bins hold ``q + 1`` indices and the
    rest ``q``.
    """
    s = np.asarray(scores, dtype=float).ravel()
    n = s.size
    if B < 1 or B > n:
        raise ValueError(f"need 1 <= B <= n, got B={B}, n={n}")
    order = np.argsort(s, kind="stable")
    q, r = divmod(n, B)
    sizes = [q + 1] * r + [q] * (B - r)
    edges = np.cumsum([0] + sizes)
    return Partition([order[a:b] for a, b in zip(edges[:-1], edges[1:])], keys=range(B))


def _node_partition(nodes: np.ndarray, fallback=False) -> Partition:
    ids = np.unique(nodes)
    return Partition([np.flatnonzero(nodes == k) for k in ids], keys=ids.tolist(),
                     fallback=fallback)


def leaf_partition(tree, X) -> Partition:
    """One bin per leaf that receives at least one row, keyed by node id."""
    if not isinstance(tree, TreeModel):
        raise TypeError(f"leaf partition needs a tree model, got {type(tree).__name__}")
    return _node_partition(tree.apply(X))


def bfsl_frontier(tree: TreeModel, B: int) -> list[int] | None:
    """Node ids of the breadth-first frontier with at least ``B`` nodes.

    Layers are expanded whole: the frontier after ``k`` steps is every node
    at depth ``k`` plus shallower leaves. Returns ``None`` when the fully
    expanded tree still has fewer than ``B`` leaves.
    """
    if B < 1:
        raise ValueError("B must be positive")
    frontier = [0]
    while len(frontier) < B:
        if all(tree.left[i] < 0 for i in frontier):
            return None
        nxt = []
        for i in frontier:
            if tree.left[i] < 0:
                nxt.append(i)
            else:
                nxt.extend((int(tree.left[i]), int(tree.right[i])))
        frontier = nxt
    return frontier


def bfsl(tree, X, B: int) -> Partition:
    """Regions of the shortest breadth-first subtree with at least ``B`` leaves.

    Rows are routed by the tree's split rules until they reach a frontier
    node. Regions that receive no rows are dropped. If the tree has fewer
    than ``B`` leaves the leaf partition is returned with ``fallback`` set.
    """
    if not isinstance(tree, TreeModel):
        raise TypeError(f"BFSL binning needs a tree model, got {type(tree).__name__}")
    frontier = bfsl_frontier(tree, B)
    if frontier is None:
        warnings.warn(f"tree has {tree.n_leaves} leaves < B={B}; using leaf partition",
                      stacklevel=2)
        return _node_partition(tree.apply(X), fallback=True)
    return _node_partition(tree.apply(X, stop=frontier))

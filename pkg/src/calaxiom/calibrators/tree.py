"""Squared-error regression tree with weakest-link (cost-complexity) pruning.

Leaves score the mean training label of the samples routed to them, so a
fitted tree is the average-label-assignment of its own leaf partition.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class TreeModel:
    """Array-encoded binary tree. Node 0 is the root; ``left == -1`` marks a leaf.

    A sample goes to ``left[i]`` iff ``x[feature[i]] < threshold[i]``.
    ``value`` is the mean training label at every node (leaf score for
    leaves), ``count`` the number of training samples reaching it and
    ``sse`` their squared error around ``value``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray
    sse: np.ndarray
    n_features: int
    meta: dict = field(default_factory=dict)

    kind = "tree"

    @property
    def n_nodes(self) -> int:
        return int(self.left.size)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.left < 0)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.left < 0))

    def depth(self) -> np.ndarray:
        d = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.left[i] >= 0:
                d[self.left[i]] = d[self.right[i]] = d[i] + 1
        return d

    def apply(self, X, stop=None) -> np.ndarray:
        """Node reached by each row. Routing halts early at nodes in ``stop``."""
        X = _check_X(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.intp)
        halt = self.left < 0
        if stop is not None:
            halt = halt.copy()
            halt[np.asarray(list(stop), dtype=np.intp)] = True
        active = np.flatnonzero(~halt[node])
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] < self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[~halt[node[active]]]
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_features": self.n_features,
            "nodes": [
                {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                 "left": int(self.left[i]), "right": int(self.right[i]),
                 "value": float(self.value[i]), "count": int(self.count[i]),
                 "sse": float(self.sse[i])}
                for i in range(self.n_nodes)
            ],
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        nodes = d["nodes"]
        col = lambda k, t: np.array([n[k] for n in nodes], dtype=t)  # noqa: E731
        return cls(col("feature", np.intp), col("threshold", float), col("left", np.intp),
                   col("right", np.intp), col("value", float), col("count", np.int64),
                   col("sse", float), int(d["n_features"]), dict(d.get("meta", {})))


def _check_X(X, d):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != d:
        raise ValueError(f"expected {d} features, got {X.shape[1]}")
    return X


def _node_sse(y_sum: float, n: int) -> float:
    # labels are 0/1 so sum(y^2) == sum(y)
    return y_sum - y_sum * y_sum / n if n else 0.0


def _best_split(X, y, idx, min_leaf):
    """(gain, feature, threshold) of the best split of ``idx``, or None."""
    n = idx.size
    if n < 2 * min_leaf:
        return None
    yy = y[idx]
    total = float(yy.sum())
    parent = _node_sse(total, n)
    if parent <= 0.0:
        return None
    best = None
    for j in range(X.shape[1]):
        xs = X[idx, j]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        cum = np.cumsum(yy[order], dtype=float)
        # split after position k-1: left = first k samples
        k = np.arange(min_leaf, n - min_leaf + 1)
        if k.size == 0:
            continue
        valid = xs[k - 1] < xs[k]
        k = k[valid]
        if k.size == 0:
            continue
        ls = cum[k - 1]
        rs = total - ls
        child = (ls - ls * ls / k) + (rs - rs * rs / (n - k))
        m = int(np.argmin(child))  # first minimum = lowest threshold
        gain = parent - child[m]
        if best is None or gain > best[0]:
            a, b = xs[k[m] - 1], xs[k[m]]
            thr = (a + b) / 2
            if not a < thr <= b:
                thr = b
            best = (gain, j, float(thr))
    if best is None or best[0] <= 1e-12 * max(parent, 1.0):
        return None
    return best


def grow_tree(X, y, min_leaf: int = 1, max_depth: int | None = None,
              max_leaves: int | None = None) -> TreeModel:
    """Greedy best-first growth minimising within-node squared error.

    Leaves are expanded in order of decreasing squared-error reduction
    (earliest-created node first on ties) until no split helps or a
    budget is hit. Without ``max_leaves`` this grows the same tree as
    depth-first recursion.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.size or y.size == 0:
        raise ValueError("need one label per row and at least one row")
    feature, thr, left, right, value, count, sse, depth, members = [], [], [], [], [], [], [], [], []

    def add(idx, d):
        s = float(y[idx].sum())
        for column, v in ((feature, -1), (thr, math.nan), (left, -1), (right, -1),
                          (value, s / idx.size), (count, idx.size),
                          (sse, _node_sse(s, idx.size)), (depth, d), (members, idx)):
            column.append(v)
        return len(value) - 1

    heap = []

    def push(node):
        if max_depth is not None and depth[node] >= max_depth:
            return
        split = _best_split(X, y, members[node], min_leaf)
        if split is not None:
            heapq.heappush(heap, (-split[0], node, split[1], split[2]))

    push(add(np.arange(y.size), 0))
    n_leaves = 1
    while heap and (max_leaves is None or n_leaves < max_leaves):
        _, node, j, t = heapq.heappop(heap)
        idx = members[node]
        mask = X[idx, j] < t
        feature[node], thr[node] = j, t
        left[node] = add(idx[mask], depth[node] + 1)
        right[node] = add(idx[~mask], depth[node] + 1)
        members[node] = None
        n_leaves += 1
        push(left[node])
        push(right[node])
    return TreeModel(np.array(feature, dtype=np.intp), np.array(thr, dtype=float),
                     np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                     np.array(value, dtype=float), np.array(count, dtype=np.int64),
                     np.array(sse, dtype=float), X.shape[1])


def _postorder(tree: TreeModel) -> list[int]:
    out, stack = [], [0]
    while stack:
        i = stack.pop()
        out.append(i)
        if tree.left[i] >= 0:
            stack.extend((tree.left[i], tree.right[i]))
    return out[::-1]


def collapse_alphas(tree: TreeModel) -> np.ndarray:
    """Smallest cost-complexity alpha at which each node becomes a leaf.

    The optimal pruned cost of a subtree, ``C_t(alpha) = min_S R(S) + alpha |S|``
    with ``R`` the squared error over the root count, is concave and
    piecewise linear. It is carried bottom-up as ``(start, intercept, slope)``
    segments; node ``t`` collapses on its own once ``R(t) + alpha`` drops
    to the children's combined cost, and a node is a leaf of ``T(alpha)`` as
    soon as it or any ancestor has collapsed. Leaves of ``tree`` get ``-inf``.
    """
    n_total = float(tree.count[0])
    direct = np.full(tree.n_nodes, -math.inf)
    segs: dict[int, list] = {}
    for i in _postorder(tree):
        r = tree.sse[i] / n_total
        if tree.left[i] < 0:
            segs[i] = [(0.0, r, 1.0)]
            continue
        merged = _add_segments(segs.pop(tree.left[i]), segs.pop(tree.right[i]))
        cross, keep = math.inf, merged
        for k, (s, b, m) in enumerate(merged):
            end = merged[k + 1][0] if k + 1 < len(merged) else math.inf
            a = max((r - b) / (m - 1.0), s)
            if a < end:
                cross, keep = a, merged[:k] + ([(s, b, m)] if a > s else [])
                break
        direct[i] = cross
        segs[i] = keep + [(cross, r, 1.0)]
    eff = direct.copy()
    for i in _postorder(tree)[::-1]:
        if tree.left[i] >= 0:
            for c in (tree.left[i], tree.right[i]):
                if tree.left[c] >= 0:
                    eff[c] = min(eff[c], eff[i])
    return eff


def _add_segments(a, b):
    starts = sorted({s for s, _, _ in a} | {s for s, _, _ in b})
    out, ia, ib = [], 0, 0
    for s in starts:
        while ia + 1 < len(a) and a[ia + 1][0] <= s:
            ia += 1
        while ib + 1 < len(b) and b[ib + 1][0] <= s:
            ib += 1
        out.append((s, a[ia][1] + b[ib][1], a[ia][2] + b[ib][2]))
    return out


def prune(tree: TreeModel, alpha: float, alphas: np.ndarray | None = None) -> TreeModel:
    """Smallest subtree minimising ``SSE/N + alpha * n_leaves``."""
    eff = collapse_alphas(tree) if alphas is None else alphas
    return _collapse(tree, eff > alpha, alpha)


def _collapse(tree: TreeModel, split_ok: np.ndarray, alpha: float) -> TreeModel:
    """Copy of ``tree`` where nodes with ``split_ok`` False become leaves; renumbered."""
    old_ids, stack = [], [0]
    while stack:
        i = stack.pop()
        old_ids.append(i)
        if tree.left[i] >= 0 and split_ok[i]:
            stack.extend((tree.right[i], tree.left[i]))
    old_ids.sort()
    new_id = {o: k for k, o in enumerate(old_ids)}
    o = np.array(old_ids, dtype=np.intp)
    internal = np.array([tree.left[i] >= 0 and split_ok[i] for i in old_ids])
    left = np.where(internal, [new_id.get(tree.left[i], -1) for i in old_ids], -1)
    right = np.where(internal, [new_id.get(tree.right[i], -1) for i in old_ids], -1)
    feature = np.where(internal, tree.feature[o], -1)
    thr = np.where(internal, tree.threshold[o], math.nan)
    meta = dict(tree.meta, alpha=alpha)
    return TreeModel(feature.astype(np.intp), thr, left.astype(np.intp), right.astype(np.intp),
                     tree.value[o].copy(), tree.count[o].copy(), tree.sse[o].copy(),
                     tree.n_features, meta)


def pruning_path(tree: TreeModel, alphas: np.ndarray | None = None) -> list[float]:
    """Weakest-link alphas ``0 = a_0 < a_1 < ...`` at which the optimal subtree shrinks."""
    eff = collapse_alphas(tree) if alphas is None else alphas
    return [0.0] + sorted(set(float(a) for a in eff[tree.left >= 0] if a > 0))


def _cv_candidates(path: list[float]) -> list[float]:
    # one representative per path interval: geometric midpoints, as in CART
    cands = [0.0]
    for a, b in zip(path[1:], path[2:]):
        cands.append(math.sqrt(a * b))
    if len(path) > 1:
        cands.append(path[-1])
    return cands


def _paths(tree: TreeModel, X) -> np.ndarray:
    """Root-to-leaf node ids per row, padded with the leaf id."""
    X = _check_X(X, tree.n_features)
    depth = int(tree.depth().max()) if tree.n_nodes > 1 else 0
    out = np.zeros((X.shape[0], depth + 1), dtype=np.intp)
    node = np.zeros(X.shape[0], dtype=np.intp)
    for k in range(1, depth + 1):
        internal = tree.left[node] >= 0
        go_left = np.zeros(X.shape[0], dtype=bool)
        rows = np.flatnonzero(internal)
        cur = node[rows]
        go_left[rows] = X[rows, tree.feature[cur]] < tree.threshold[cur]
        node = np.where(internal, np.where(go_left, tree.left[node], tree.right[node]), node)
        out[:, k] = node
    return out


def fit_tree(X, y, min_leaf: int = 1, max_depth: int | None = None, cv_folds: int = 5,
             alpha: float | None = None, alpha_grid=None, seed: int = 0,
             max_leaves: int | None = None) -> TreeModel:
    """Grow a squared-error tree and prune it at a cross-validated alpha.

    Parameters
    ----------
    X, y
        Features and 0/1 labels.
    min_leaf : int
        Minimum samples per leaf.
    max_depth, max_leaves : int, optional
        Growth limits applied before pruning.
    cv_folds : int
        Folds used to choose alpha; ``cv_folds < 2`` disables pruning.
    alpha : float, optional
        Fixed cost-complexity penalty; skips cross-validation. ``inf``
        collapses the tree to a single leaf.
    alpha_grid : sequence of float, optional
        Candidate alphas; defaults to the geometric midpoints of the
        full-data pruning path.
    seed : int
        Seed for the fold assignment.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if y.size < 2 * min_leaf:
        raise ValueError(f"need at least {2 * min_leaf} samples")
    meta = {"min_leaf": min_leaf, "max_depth": max_depth, "max_leaves": max_leaves,
            "cv_folds": cv_folds, "seed": seed}
    full = grow_tree(X, y, min_leaf=min_leaf, max_depth=max_depth, max_leaves=max_leaves)
    full = TreeModel(full.feature, full.threshold, full.left, full.right, full.value,
                     full.count, full.sse, full.n_features, meta)
    if alpha is None:
        if cv_folds < 2 or y.size < cv_folds:
            return prune(full, 0.0)
        grid = list(alpha_grid) if alpha_grid is not None else _cv_candidates(pruning_path(full))
        alpha = select_alpha(X, y, grid, cv_folds, seed, min_leaf, max_depth, max_leaves)
    return prune(full, alpha)


def select_alpha(X, y, grid, folds, seed, min_leaf=1, max_depth=None, max_leaves=None) -> float:
    """Alpha from ``grid`` with the lowest k-fold held-out squared error.

    Ties go to the largest alpha, i.e. the smallest tree.
    """
    grid = np.asarray(grid, dtype=float)
    rng = np.random.default_rng(seed)
    fold_of = rng.permutation(np.arange(y.size) % folds)
    err = np.zeros(grid.size)
    for k in range(folds):
        tr, te = fold_of != k, fold_of == k
        if tr.sum() < 2 * min_leaf:
            tree = grow_tree(X[tr], y[tr], max_depth=0)
        else:
            tree = grow_tree(X[tr], y[tr], min_leaf, max_depth, max_leaves)
        eff = collapse_alphas(tree)
        eff[tree.left < 0] = -math.inf
        paths = _paths(tree, X[te])
        path_alpha = eff[paths]
        rows = np.arange(paths.shape[0])
        for g, a in enumerate(grid):
            stop = np.argmax(path_alpha <= a, axis=1)
            pred = tree.value[paths[rows, stop]]
            err[g] += float(np.sum((pred - y[te]) ** 2))
    best = err.min()
    ok = grid[err <= best + 1e-12 * max(best, 1.0)]
    return float(ok.max())

"""CART tree construction on presorted columns.

Trees are stored as flat arrays (preorder node numbering). Candidate splits
sit halfway between consecutive distinct values; rows with ``x <= threshold``
go left. Among equally good splits the lowest feature index wins, then the
lowest threshold.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

LEAF = -1

# Below this fraction of the full sample, re-sorting the node's rows is
# cheaper than filtering the presorted order.
_SUBSORT_FRACTION = 0.125


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        n = X.shape[0]
        node = np.zeros(n, dtype=np.int64)
        rows = np.arange(n)
        for _ in range(self.depth):
            feat = self.feature[node]
            internal = feat != LEAF
            if not internal.any():
                break
            go_left = X[rows, np.where(internal, feat, 0)] <= self.threshold[node]
            step = np.where(go_left, self.left[node], self.right[node])
            node = np.where(internal, step, node)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


class Presorted:
    """Column-wise sort order of a fixed training matrix, shared across trees."""

    def __init__(self, X: np.ndarray):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.order = np.argsort(self.X, axis=0, kind="stable").T.copy()


def _midpoint(lo: float, hi: float) -> float:
    mid = lo + (hi - lo) / 2.0
    # Adjacent floats: the midpoint rounds onto hi and would send hi left.
    return lo if mid >= hi else mid


def gini_cost(w, t):
    """Weighted Gini cost of a split (children impurity times weight, halved).

    ``w`` and ``t`` are left-side cumulative weight and weighted-positive
    totals, with the node totals in the last column.
    """
    W = w[:, -1:]
    T = t[:, -1:]
    wl, tl = w[:, :-1], t[:, :-1]
    wr, tr = W - wl, T - tl
    with np.errstate(divide="ignore", invalid="ignore"):
        return tl * (wl - tl) / wl + tr * (wr - tr) / wr


def sse_cost(w, t):
    """Squared-error split cost up to a constant: -(S_L^2/W_L + S_R^2/W_R)."""
    W = w[:, -1:]
    T = t[:, -1:]
    wl, tl = w[:, :-1], t[:, :-1]
    wr, tr = W - wl, T - tl
    with np.errstate(divide="ignore", invalid="ignore"):
        return -(tl * tl / wl + tr * tr / wr)


def build_tree(
    data: Presorted,
    target: np.ndarray,
    weight: np.ndarray,
    *,
    criterion: str,
    max_depth: int,
    min_samples_leaf: int = 1,
    features: Callable[[], np.ndarray] | None = None,
    leaf_value: Callable[[np.ndarray], float] | None = None,
) -> Tree:
    """Grow one tree depth-first.

    ``weight`` holds per-row multiplicities (bootstrap counts, or ones); rows
    with zero weight never enter the tree. ``features`` returns the sorted
    candidate feature indices for a node (all features when omitted).
    ``leaf_value`` maps a leaf's row indices to its stored value; by default
    the weighted mean of ``target``.
    """
    if criterion == "gini":
        cost_fn = gini_cost
    elif criterion == "sse":
        cost_fn = sse_cost
    else:
        raise ValueError(f"unknown criterion {criterion!r}")

    X, order = data.X, data.order
    n, d = X.shape
    target = np.asarray(target, dtype=float)
    weight = np.asarray(weight, dtype=float)
    wt = weight * target
    all_features = np.arange(d)

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node():
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(0.0)
        return len(feature) - 1

    def make_leaf(node, rows):
        if leaf_value is not None:
            value[node] = float(leaf_value(rows))
        else:
            value[node] = float(wt[rows].sum() / weight[rows].sum())

    root_rows = np.flatnonzero(weight > 0)
    stack = [(new_node(), root_rows, 0)]
    max_seen = 0
    while stack:
        node, rows, depth = stack.pop()
        max_seen = max(max_seen, depth)
        W = weight[rows].sum()
        T = wt[rows].sum()
        if (
            depth >= max_depth
            or len(rows) < 2
            or W < 2 * min_samples_leaf
            or (criterion == "gini" and (T <= 0 or T >= W))
        ):
            make_leaf(node, rows)
            continue

        cand = all_features if features is None else features()
        if len(rows) >= _SUBSORT_FRACTION * n:
            in_node = np.zeros(n, dtype=bool)
            in_node[rows] = True
            sub = order[cand]
            idx = sub[in_node[sub]].reshape(len(cand), len(rows))
        else:
            local = np.argsort(X[rows][:, cand], axis=0, kind="stable")
            idx = rows[local].T
        vals = X[idx, cand[:, None]]
        cw = np.cumsum(weight[idx], axis=1)
        ct = np.cumsum(wt[idx], axis=1)
        cost = cost_fn(cw, ct)
        lw = cw[:, :-1]
        valid = (vals[:, 1:] > vals[:, :-1]) & (lw >= min_samples_leaf) & (W - lw >= min_samples_leaf)
        cost = np.where(valid, cost, np.inf)
        best = int(np.argmin(cost))
        fi, pos = divmod(best, cost.shape[1])
        if not np.isfinite(cost[fi, pos]):
            make_leaf(node, rows)
            continue
        if criterion == "sse":
            parent = -(T * T / W)
            if not cost[fi, pos] < parent - 1e-12 * (1.0 + abs(parent)):
                make_leaf(node, rows)
                continue

        f = int(cand[fi])
        thr = _midpoint(vals[fi, pos], vals[fi, pos + 1])
        go_left = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        lnode = new_node()
        rnode = new_node()
        left[node], right[node] = lnode, rnode
        # Right pushed first so the left subtree is numbered first.
        stack.append((rnode, rows[~go_left], depth + 1))
        stack.append((lnode, rows[go_left], depth + 1))

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
        max_seen,
    )


def pack_trees(trees: list[Tree]) -> dict:
    sizes = np.array([t.n_nodes for t in trees], dtype=np.int64)
    cat = lambda attr, dtype: (
        np.concatenate([getattr(t, attr) for t in trees]) if trees else np.zeros(0, dtype=dtype)
    )
    return {
        "tree_sizes": sizes,
        "tree_depths": np.array([t.depth for t in trees], dtype=np.int64),
        "feature": cat("feature", np.int64),
        "threshold": cat("threshold", float),
        "left": cat("left", np.int64),
        "right": cat("right", np.int64),
        "value": cat("value", float),
    }


def unpack_trees(state: dict) -> list[Tree]:
    trees = []
    start = 0
    for size, depth in zip(state["tree_sizes"], state["tree_depths"]):
        end = start + int(size)
        trees.append(
            Tree(
                np.asarray(state["feature"][start:end], dtype=np.int64),
                np.asarray(state["threshold"][start:end], dtype=float),
                np.asarray(state["left"][start:end], dtype=np.int64),
                np.asarray(state["right"][start:end], dtype=np.int64),
                np.asarray(state["value"][start:end], dtype=float),
                int(depth),
            )
        )
        start = end
    return trees

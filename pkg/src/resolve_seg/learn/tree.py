"""Weighted CART classification trees (Gini impurity, axis-aligned splits)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 6
    min_leaf_fraction: float = 0.01  # of the total training weight


@dataclass
class DecisionTree:
    """Flattened binary tree.

    Node ``i`` is a leaf when ``feature[i] == -1``; otherwise samples with
    ``x[feature[i]] <= threshold[i]`` go to ``left[i]`` and the rest to
    ``right[i]``.  ``value[i]`` holds class probabilities (used at leaves).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    @property
    def n_classes(self) -> int:
        return self.value.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        def _d(i):
            if self.feature[i] == LEAF:
                return 0
            return 1 + max(_d(self.left[i]), _d(self.right[i]))

        return _d(0)

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        # ties go to the larger class index
        return proba.shape[1] - 1 - np.argmax(proba[:, ::-1], axis=1)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict, n_features: int) -> "DecisionTree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64).reshape(len(d["feature"]), -1),
            n_features=n_features,
        )


def _best_split(X, Yw, min_leaf):
    """Lowest weighted-Gini split of the node holding rows ``X``.

    ``Yw`` is the per-row one-hot class matrix scaled by sample weight.
    Returns ``(impurity, feature, threshold)`` or ``None``.
    """
    n, d = X.shape
    if n < 2:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    left = np.cumsum(Yw[order], axis=0)[:-1]  # (n-1, d, K)
    total = Yw.sum(axis=0)
    right = total - left
    wl = left.sum(axis=2)
    wr = right.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        imp = (wl - (left**2).sum(axis=2) / wl) + (wr - (right**2).sum(axis=2) / wr)
    valid = (xs[:-1] < xs[1:]) & (wl >= min_leaf) & (wr >= min_leaf) & (wl > 0) & (wr > 0)
    if not valid.any():
        return None
    imp = np.where(valid, imp, np.inf).T  # (d, n-1): ties -> lowest feature, then position
    flat = int(np.argmin(imp))
    f, pos = divmod(flat, n - 1)
    lo, hi = xs[pos, f], xs[pos + 1, f]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return float(imp[f, pos]), int(f), float(thr)


def train_tree(X, y, weights, n_classes: int, config: TreeConfig = TreeConfig()) -> DecisionTree:
    """Greedy CART on weighted samples.

    Nodes stop splitting at ``max_depth``, when pure, or when no split leaves
    both children with at least ``min_leaf_fraction`` of the total weight
    without increasing impurity.
    Inputs identical in every feature but mixed in label give a single leaf.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    if X.ndim != 2 or len(X) != len(y) or len(y) != len(w):
        raise ValueError("X, y and weights are not aligned")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("weights must be nonnegative with a positive sum")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError("labels outside [0, n_classes)")
    Yw = np.zeros((len(y), n_classes))
    Yw[np.arange(len(y)), y] = w
    min_leaf = config.min_leaf_fraction * w.sum()

    feature, threshold, left, right, value = [], [], [], [], []

    def build(rows, depth):
        node = len(feature)
        cls_w = Yw[rows].sum(axis=0)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(cls_w / cls_w.sum() if cls_w.sum() > 0 else np.full(n_classes, 1.0 / n_classes))
        if depth >= config.max_depth or np.count_nonzero(cls_w) <= 1:
            return node
        wt = cls_w.sum()
        parent = wt - (cls_w**2).sum() / wt
        split = _best_split(X[rows], Yw[rows], min_leaf)
        # zero-gain splits are allowed (XOR-like cells need one to get started)
        if split is None or split[0] > parent + 1e-12 * max(wt, 1.0):
            return node
        _, f, thr = split
        mask = X[rows, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = build(rows[mask], depth + 1)
        right[node] = build(rows[~mask], depth + 1)
        return node

    build(np.arange(len(y)), 0)
    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=np.float64),
        n_features=X.shape[1],
    )


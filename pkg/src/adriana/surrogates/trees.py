"""CART regression trees, bagged forests and squared-loss boosting on stumps."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError

LEAF = -1


class Tree:
    """Array-encoded binary tree; a sample goes left when ``x[feature] < threshold``."""

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    @property
    def depth(self) -> int:
        def d(i):
            return 0 if self.feature[i] == LEAF else 1 + max(d(self.left[i]), d(self.right[i]))
        return d(0)

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while np.any(active):
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] < self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return self.value[node]

    def to_mapping(self) -> dict:
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(),
                "value": self.value.tolist()}

    @classmethod
    def from_mapping(cls, m: dict) -> "Tree":
        return cls(m["feature"], m["threshold"], m["left"], m["right"], m["value"])


def _best_split(X, y, features, min_leaf):
    """Best (sse, feature, threshold) over the candidate features, or None.

    Candidate thresholds are the distinct feature values (excluding the smallest);
    ties resolve to the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    best = None
    for f in sorted(features):
        order = np.argsort(X[:, f], kind="stable")
        xs, ys = X[order, f], y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]
        # split after position k-1: left = first k samples
        k = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (k >= min_leaf) & (n - k >= min_leaf)
        if not np.any(valid):
            continue
        k = k[valid]
        lsum, lsq = csum[k - 1], csq[k - 1]
        rsum, rsq = total - lsum, total_sq - lsq
        sse = (lsq - lsum ** 2 / k) + (rsq - rsum ** 2 / (n - k))
        j = int(np.argmin(sse))  # first minimum = lowest threshold
        cand = (float(sse[j]), f, float(xs[k[j]]))
        if best is None or cand[0] < best[0] - 1e-12 * max(1.0, abs(best[0])):
            best = cand
    return best


def fit_tree(X, y, max_depth=None, min_split=2, min_leaf=1, max_features=None, rng=None) -> Tree:
    """Greedy CART by variance reduction.

    ``max_features`` features are drawn without replacement at each node when it
    is smaller than the number of columns (``rng`` required then).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise ValidationError("cannot fit a tree on no samples")
    if min_leaf < 1 or min_split < 2:
        raise ValidationError("min_leaf must be >= 1 and min_split >= 2")
    d = X.shape[1]
    n_feat = d if max_features is None else max(1, min(int(max_features), d))
    feature, threshold, left, right, value = [], [], [], [], []

    def build(idx, depth):
        node = len(value)
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        ys = y[idx]
        if ((max_depth is not None and depth >= max_depth) or len(idx) < min_split
                or np.all(ys == ys[0])):
            return node
        feats = range(d) if n_feat == d else rng.choice(d, size=n_feat, replace=False)
        split = _best_split(X[idx], ys, feats, min_leaf)
        if split is None:
            return node
        sse, f, thr = split
        parent_sse = float(np.sum((ys - ys.mean()) ** 2))
        if not sse < parent_sse:
            return node
        mask = X[idx, f] < thr
        feature[node], threshold[node] = f, thr
        left[node] = build(idx[mask], depth + 1)
        right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(len(y)), 0)
    return Tree(feature, threshold, left, right, value)


def fit_forest(X, y, estimators=50, max_depth=None, min_split=2, min_leaf=1,
               max_features="sqrt", bootstrap=True, seed=0) -> list[Tree]:
    """Bootstrap-bagged trees with per-split feature subsampling."""
    if estimators < 1:
        raise ValidationError("estimators must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    d = X.shape[1]
    if max_features == "sqrt":
        max_features = max(1, int(math.sqrt(d)))
    elif max_features is None:
        max_features = d
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(estimators):
        idx = rng.integers(0, len(y), size=len(y)) if bootstrap else np.arange(len(y))
        trees.append(fit_tree(X[idx], y[idx], max_depth, min_split, min_leaf, max_features, rng))
    return trees


def predict_forest(trees, X) -> np.ndarray:
    return np.mean([t.predict(X) for t in trees], axis=0)


def fit_boosted(X, y, estimators=25, learning_rate=0.1, max_depth=1, max_features=None,
                seed=0):
    """Gradient boosting with squared loss: start at the mean, fit trees to residuals.

    Returns (base value, list of trees).
    """
    if estimators < 1:
        raise ValidationError("estimators must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    base = float(y.mean())
    pred = np.full(len(y), base)
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(estimators):
        tree = fit_tree(X, y - pred, max_depth=max_depth, max_features=max_features, rng=rng)
        trees.append(tree)
        pred = pred + learning_rate * tree.predict(X)
    return base, trees


def predict_boosted(base, trees, learning_rate, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.full(len(X), base)
    for t in trees:
        out += learning_rate * t.predict(X)
    return out

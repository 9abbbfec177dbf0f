"""A small random forest classifier: Gini CART trees on bootstrap samples.

Trees grow until leaves are pure (or hit ``min_leaf``/``max_depth``). At
each split a fresh random subset of ceil(sqrt(p)) features is considered;
if none of them can split the node, the remaining features are tried in
random order. Importance is the mean over trees of each tree's normalized
impurity decrease, renormalized to sum to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .._rng import np_substream


class ForestFitError(ValueError):
    pass


@dataclass
class Tree:
    feature: np.ndarray      # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray       # class counts per node, shape (nodes, classes)
    importance: np.ndarray   # raw impurity decrease per feature

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] >= 0
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class index with the largest count in each sample's leaf."""
        return self.counts[self.leaf_of(X)].argmax(axis=1)


def _gini_weighted(counts: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """n * gini for each row of class counts."""
    with np.errstate(invalid="ignore", divide="ignore"):
        return totals - (counts ** 2).sum(axis=-1) / totals


def _best_split(x: np.ndarray, Y: np.ndarray, min_leaf: int):
    """Best threshold on one feature. Returns (weighted child impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    m = len(xs)
    valid = np.nonzero(xs[:-1] < xs[1:])[0]
    if min_leaf > 1:
        valid = valid[(valid + 1 >= min_leaf) & (m - valid - 1 >= min_leaf)]
    if len(valid) == 0:
        return None
    left = np.cumsum(Y[order], axis=0)[valid]
    total = Y.sum(axis=0)
    right = total[None, :] - left
    n_left = (valid + 1).astype(float)
    n_right = m - n_left
    cost = _gini_weighted(left, n_left) + _gini_weighted(right, n_right)
    i = int(np.argmin(cost))
    pos = valid[i]
    threshold = (xs[pos] + xs[pos + 1]) / 2.0
    if threshold >= xs[pos + 1]:  # guard against rounding onto the right value
        threshold = xs[pos]
    return float(cost[i]), float(threshold)


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, max_features: int, rng: np.random.Generator,
              min_leaf: int = 1, max_depth: Optional[int] = None) -> Tree:
    n_features = X.shape[1]
    onehot = np.eye(n_classes)[y]
    feature, threshold, left, right, counts = [], [], [], [], []
    importance = np.zeros(n_features)

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(onehot[idx].sum(axis=0))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        node_counts = counts[node]
        m = len(idx)
        if (node_counts > 0).sum() < 2 or m < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            continue
        parent_cost = m - float((node_counts ** 2).sum()) / m
        order = rng.permutation(n_features)
        best = None
        tried = 0
        for f in order:
            if tried >= max_features and best is not None:
                break
            tried += 1
            found = _best_split(X[idx, f], onehot[idx], min_leaf)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], found[1], f)
        if best is None:
            continue
        cost, thr, f = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        importance[f] += parent_cost - cost
        feature[node], threshold[node] = int(f), thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right),
                np.array(counts), importance)


@dataclass
class ForestModel:
    trees: list
    bootstraps: list
    classes: np.ndarray
    feature_names: list
    importances: np.ndarray
    oob_score: Optional[float]
    train_index: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    holdout_index: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))
    holdout_score: Optional[float] = None

    def votes(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        tally = np.zeros((len(X), len(self.classes)), dtype=int)
        rows = np.arange(len(X))
        for tree in self.trees:
            tally[rows, tree.predict(X)] += 1
        return tally

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote over trees (ties go to the lower class)."""
        return self.classes[self.votes(X).argmax(axis=1)]

    def ranked_importances(self) -> list:
        order = sorted(range(len(self.feature_names)), key=lambda i: (-self.importances[i], i))
        return [(self.feature_names[i], float(self.importances[i])) for i in order]


def fit_forest(X, y, n_trees: int = 100, seed=0, max_features: Optional[int] = None, min_leaf: int = 1,
               max_depth: Optional[int] = None, feature_names: Optional[Sequence[str]] = None) -> ForestModel:
    """Fit on all of (X, y); tree i bootstraps from the stream keyed by (seed, i)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ForestFitError("X must be 2-d with one row per label")
    classes, yi = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ForestFitError("training labels contain a single class")
    n, p = X.shape
    max_features = max_features or math.ceil(math.sqrt(p))
    prefix = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    trees, boots = [], []
    oob_votes = np.zeros((n, len(classes)), dtype=int)
    per_tree = np.zeros((n_trees, p))
    for i in range(n_trees):
        rng = np_substream(*prefix, i)
        boot = rng.integers(0, n, size=n)
        tree = grow_tree(X[boot], yi[boot], len(classes), max_features, rng, min_leaf, max_depth)
        trees.append(tree)
        boots.append(boot)
        total = tree.importance.sum()
        if total > 0:
            per_tree[i] = tree.importance / total
        out = np.ones(n, dtype=bool)
        out[boot] = False
        out_idx = np.nonzero(out)[0]
        if len(out_idx):
            oob_votes[out_idx, tree.predict(X[out_idx])] += 1
    importances = per_tree.mean(axis=0)
    s = importances.sum()
    importances = importances / s if s > 0 else np.full(p, 1.0 / p)
    voted = oob_votes.sum(axis=1) > 0
    oob = float((oob_votes[voted].argmax(axis=1) == yi[voted]).mean()) if voted.any() else None
    names = list(feature_names) if feature_names is not None else [f"x{j}" for j in range(p)]
    return ForestModel(trees, boots, classes, names, importances, oob)


def forest_score(model: ForestModel, X, y) -> float:
    """Accuracy of the forest's majority vote."""
    return float((model.predict(X) == np.asarray(y)).mean())


def train_holdout_split(n: int, split: float = 0.7, seed=0) -> tuple:
    if not 0.0 < split < 1.0:
        raise ValueError(f"split must lie in (0, 1), got {split}")
    prefix = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    perm = np_substream(*prefix, 1 << 20).permutation(n)
    cut = int(round(split * n))
    return np.sort(perm[:cut]), np.sort(perm[cut:])


def forest_fit(X, y, split: float = 0.7, seed=0, **kwargs) -> ForestModel:
    """Fit on a ``split`` share of the rows; the rest is scored as holdout."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    train, hold = train_holdout_split(len(y), split, seed)
    model = fit_forest(X[train], y[train], seed=seed, **kwargs)
    model.train_index, model.holdout_index = train, hold
    if len(hold):
        model.holdout_score = forest_score(model, X[hold], y[hold])
    return model


def forest_importance(model: ForestModel) -> list:
    return model.ranked_importances()

"""Bagged CART classifier with Gini splits and mean-decrease-in-impurity importances."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cvtnet import _kernels
from cvtnet.dataset import LabeledTable


class ForestError(ValueError):
    pass


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features: str = "sqrt"
    bootstrap: bool = True
    seed: int = 0
    min_samples_split: int = 2

    def __post_init__(self):
        if self.n_trees < 1:
            raise ForestError("n_trees must be >= 1")
        if self.max_features not in ("sqrt", "all"):
            raise ForestError(f"max_features must be 'sqrt' or 'all', got {self.max_features!r}")
        if self.min_samples_split < 2:
            raise ForestError("min_samples_split must be >= 2")

    def n_split_features(self, n_features: int) -> int:
        if self.max_features == "all":
            return n_features
        return max(1, int(math.sqrt(n_features)))


def gini(counts) -> float:
    """Gini impurity ``1 - sum(p_c ** 2)`` of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ForestError("class counts must be nonnegative")
    total = counts.sum()
    if total <= 0:
        raise ForestError("gini of an empty node")
    p = counts / total
    return float(1.0 - np.dot(p, p))


@dataclass
class Tree:
    """Flat array tree; ``feature[k] == -1`` marks a leaf.

    ``value[k]`` holds the class counts reaching node ``k`` and
    ``decrease[k]`` the weighted impurity decrease ``N_t*i(t) - N_l*i(l) - N_r*i(r)``
    (zero at leaves).
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    decrease: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.feature == -1))

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature[node] != -1
        while np.any(active):
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] != -1
        return node

    def predict(self, X) -> np.ndarray:
        # argmax picks the lowest class id on ties
        return np.argmax(self.value[self.apply(X)], axis=1)

    def feature_decrease(self, n_features: int) -> np.ndarray:
        out = np.zeros(n_features)
        internal = self.feature != -1
        np.add.at(out, self.feature[internal], self.decrease[internal])
        return out


def fit_tree(X, y, n_classes: int, cfg: ForestConfig, rng: np.random.Generator) -> Tree:
    """Grow an unpruned CART tree depth first."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.intp)
    n_features = X.shape[1]
    k = cfg.n_split_features(n_features)
    feature, threshold, left, right, value, decrease = [], [], [], [], [], []

    def new_node(counts):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts)
        decrease.append(0.0)
        return len(feature) - 1

    root_counts = np.bincount(y, minlength=n_classes)
    stack = [(np.arange(X.shape[0]), new_node(root_counts))]
    while stack:
        idx, node = stack.pop()
        counts = value[node]
        n = idx.shape[0]
        if n < cfg.min_samples_split or np.count_nonzero(counts) <= 1:
            continue
        order = rng.permutation(n_features).astype(np.intp)
        f, thr, _ = _kernels.best_split(X[idx], y[idx], n_classes, order, k)
        if f < 0:
            continue
        mask = X[idx, f] <= thr
        l_idx, r_idx = idx[mask], idx[~mask]
        l_counts = np.bincount(y[l_idx], minlength=n_classes)
        r_counts = np.bincount(y[r_idx], minlength=n_classes)
        feature[node] = f
        threshold[node] = thr
        decrease[node] = max(0.0, n * gini(counts) - l_idx.shape[0] * gini(l_counts)
                             - r_idx.shape[0] * gini(r_counts))
        left[node] = new_node(l_counts)
        right[node] = new_node(r_counts)
        stack.append((r_idx, right[node]))
        stack.append((l_idx, left[node]))
    return Tree(np.array(feature, dtype=np.intp), np.array(threshold),
                np.array(left, dtype=np.intp), np.array(right, dtype=np.intp),
                np.array(value, dtype=np.int64).reshape(-1, n_classes), np.array(decrease))


@dataclass
class Forest:
    trees: list[Tree]
    n_features: int
    n_classes: int
    config: ForestConfig

    def predict(self, X) -> np.ndarray:
        """Majority vote over trees; ties go to the lowest class id."""
        votes = np.stack([t.predict(X) for t in self.trees], axis=1)
        counts = np.apply_along_axis(np.bincount, 1, votes, minlength=self.n_classes)
        return np.argmax(counts, axis=1)

    def accuracy(self, data: LabeledTable) -> float:
        return float(np.mean(self.predict(data.features) == data.labels))


def fit_forest(data: LabeledTable, cfg: ForestConfig = ForestConfig()) -> Forest:
    """Each tree gets its own generator spawned from ``cfg.seed``."""
    X, y = data.features, data.labels
    n = X.shape[0]
    trees = []
    for child in np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees):
        rng = np.random.default_rng(child)
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        trees.append(fit_tree(X[idx], y[idx], data.n_classes, cfg, rng))
    return Forest(trees, data.n_features, data.n_classes, cfg)


def feature_importances(forest: Forest) -> np.ndarray:
    """Mean over trees of per-tree normalized impurity decrease.

    Trees without any split are skipped; if no tree split at all the result
    is all-NaN (importance undefined).
    """
    per_tree = []
    for tree in forest.trees:
        dec = tree.feature_decrease(forest.n_features)
        total = dec.sum()
        if total > 0:
            per_tree.append(dec / total)
    if not per_tree:
        return np.full(forest.n_features, math.nan)
    mean = np.mean(per_tree, axis=0)
    return mean / mean.sum()

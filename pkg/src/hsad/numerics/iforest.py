"""Isolation forest built from scratch on flat node arrays."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.special import digamma

from .._validation import check_int, check_samples
from ..exceptions import ShapeError


def average_path_length(n) -> np.ndarray | float:
    """``c(n) = 2 H(n-1) - 2 (n-1)/n``, with the convention ``c(1) = 1``.

    ``c(0)`` is defined as 0 for completeness.
    """
    n_arr = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n_arr)
    big = n_arr >= 2
    nb = n_arr[big]
    out[big] = 2.0 * (digamma(nb) + np.euler_gamma) - 2.0 * (nb - 1.0) / nb
    out[n_arr == 1] = 1.0
    return float(out) if np.ndim(n) == 0 else out


@dataclass
class _Tree:
    feature: np.ndarray    # -1 for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_value: np.ndarray  # depth + adjustment, valid at leaves


def _build_tree(X: np.ndarray, rng: np.random.Generator, height_limit: int) -> _Tree:
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[float] = []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        sub = X[idx]
        lo, hi = sub.min(axis=0), sub.max(axis=0)
        usable = np.flatnonzero(hi > lo)
        if depth >= height_limit or idx.size <= 1 or usable.size == 0:
            # unresolved leaves get the expected remaining path; a root that
            # never split counts as one virtual split (c(1) = 1)
            adj = average_path_length(idx.size) if (idx.size > 1 or depth == 0) else 0.0
            value[node] = depth + adj
            continue
        f = int(usable[rng.integers(usable.size)])
        t = float(rng.uniform(lo[f], hi[f]))
        if t <= lo[f]:
            t = float(np.nextafter(lo[f], hi[f]))
        go_left = sub[:, f] < t
        ln, rn = new_node(), new_node()
        feature[node], threshold[node] = f, t
        left[node], right[node] = ln, rn
        stack.append((rn, idx[~go_left], depth + 1))
        stack.append((ln, idx[go_left], depth + 1))
    return _Tree(np.array(feature), np.array(threshold), np.array(left), np.array(right), np.array(value))


def _path_lengths(tree: _Tree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.intp)
    active = np.flatnonzero(tree.feature[node] >= 0)
    while active.size:
        nd = node[active]
        f = tree.feature[nd]
        go_left = X[active, f] < tree.threshold[nd]
        node[active] = np.where(go_left, tree.left[nd], tree.right[nd])
        active = active[tree.feature[node[active]] >= 0]
    return tree.leaf_value[node]


@dataclass
class IsolationForestModel:
    trees: List[_Tree]
    subsample_size: int   # effective psi = min(psi, n)
    n_features: int

    @property
    def normalizer(self) -> float:
        return average_path_length(self.subsample_size)

    def mean_path_length(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ShapeError(f"forest has {self.n_features} features, input has {X.shape[1]}")
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += _path_lengths(tree, X)
        return total / len(self.trees)

    def score_samples(self, X) -> np.ndarray:
        """Anomaly score ``2^(-E[h] / c(psi))`` in (0, 1); higher is more anomalous."""
        return np.exp2(-self.mean_path_length(X) / self.normalizer)


def iforest_fit(samples, seed: int = 0, trees: int = 100, psi: int = 256) -> IsolationForestModel:
    """Grow ``trees`` isolation trees on subsamples of size ``min(psi, n)``.

    Tree ``t`` draws from its own stream seeded by ``(seed, t)``.
    """
    X = check_samples(samples)
    trees = check_int(trees, "trees", low=1)
    psi = check_int(psi, "psi", low=1)
    n = X.shape[0]
    size = min(psi, n)
    height_limit = math.ceil(math.log2(size)) if size > 1 else 0
    built = []
    for t in range(trees):
        rng = np.random.default_rng([seed, t])
        idx = rng.choice(n, size=size, replace=False) if size < n else rng.permutation(n)
        built.append(_build_tree(X[idx], rng, height_limit))
    return IsolationForestModel(trees=built, subsample_size=size, n_features=X.shape[1])


def iforest_score(forest: IsolationForestModel, x) -> np.ndarray | float:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return float(forest.score_samples(arr[None, :])[0])
    return forest.score_samples(arr)

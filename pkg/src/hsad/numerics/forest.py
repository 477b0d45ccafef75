"""Random-forest meta-classifier.

Trees are grown by scikit-learn's CART (Gini, sqrt(d) feature bagging,
unlimited depth, min leaf 1) and then exported to plain arrays, so
prediction, voting and serialization are ours.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .._validation import check_int, check_samples
from ..exceptions import ParameterError, ShapeError


@dataclass
class ForestTree:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    vote: np.ndarray       # 1 where the leaf's majority class is anomaly

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "vote")}

    @classmethod
    def from_dict(cls, d: dict) -> "ForestTree":
        return cls(np.asarray(d["feature"], dtype=np.intp), np.asarray(d["threshold"], dtype=np.float64),
                   np.asarray(d["left"], dtype=np.intp), np.asarray(d["right"], dtype=np.intp),
                   np.asarray(d["vote"], dtype=np.int8))

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return self.vote[node]


@dataclass
class RandomForestModel:
    trees: List[ForestTree]
    n_features: int

    def predict_proba(self, X) -> np.ndarray:
        """Fraction of trees voting anomaly, per sample."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ShapeError(f"forest has {self.n_features} features, input has {X.shape[1]}")
        # scikit-learn learns thresholds on float32 inputs
        X = X.astype(np.float32).astype(np.float64)
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += tree.predict(X)
        return votes / len(self.trees)


def _export(est, classes) -> ForestTree:
    t = est.tree_
    counts = t.value[:, 0, :]
    anomaly_col = int(np.flatnonzero(classes == 1)[0])
    other = 1 - anomaly_col
    vote = (counts[:, anomaly_col] > counts[:, other]).astype(np.int8)
    feature = np.where(t.children_left < 0, -1, t.feature).astype(np.intp)
    return ForestTree(feature, t.threshold.astype(np.float64), t.children_left.astype(np.intp),
                      t.children_right.astype(np.intp), vote)


def rf_fit(features, labels, seed: int = 0, trees: int = 200) -> RandomForestModel:
    X = check_samples(features)
    y = np.asarray(labels).astype(np.int64).ravel()
    if y.shape[0] != X.shape[0]:
        raise ShapeError(f"{X.shape[0]} samples but {y.shape[0]} labels")
    if np.unique(y).size < 2:
        raise ParameterError("random forest needs both classes in the training labels")
    trees = check_int(trees, "trees", low=1)
    clf = RandomForestClassifier(n_estimators=trees, criterion="gini", max_features="sqrt",
                                 max_depth=None, min_samples_leaf=1, bootstrap=True,
                                 random_state=np.random.RandomState(seed % (2 ** 32)), n_jobs=1)
    clf.fit(X, y)
    return RandomForestModel([_export(e, clf.classes_) for e in clf.estimators_], X.shape[1])


def rf_proba(forest: RandomForestModel, x) -> np.ndarray | float:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return float(forest.predict_proba(arr[None, :])[0])
    return forest.predict_proba(arr)

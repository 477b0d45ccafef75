"""k-means (k-means++ seeding) and fuzzy c-means."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .._validation import check_int, check_real, check_samples
from ..exceptions import ParameterError
from .mahalanobis import ridge_scale, scatter

logger = logging.getLogger(__name__)

_CHUNK = 4096


def sq_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances ``(n, k)`` (no expansion trick)."""
    out = np.empty((X.shape[0], C.shape[0]))
    for start in range(0, X.shape[0], _CHUNK):
        diff = X[start:start + _CHUNK, None, :] - C[None, :, :]
        out[start:start + _CHUNK] = np.einsum("nkd,nkd->nk", diff, diff)
    return out


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Greedy k-means++ seeding: of several D^2-sampled candidates keep the best."""
    n = X.shape[0]
    n_trials = 2 + int(np.log(k))
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    closest = sq_distances(X, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            cdf = np.cumsum(closest)
            cand = np.searchsorted(cdf, rng.random(n_trials) * total, side="right")
            cand = np.minimum(cand, n - 1)
        else:
            cand = rng.integers(n, size=n_trials)
        d_cand = sq_distances(X, X[cand])
        pots = np.minimum(closest[:, None], d_cand).sum(axis=0)
        best = int(np.argmin(pots))
        centers[c] = X[cand[best]]
        closest = np.minimum(closest, d_cand[:, best])
    return centers


def _cluster_covariances(X, centers, weights, ridge_abs, unbiased) -> np.ndarray:
    """Per-cluster covariances; ``weights`` is ``(n, k)`` (hard or fuzzy)."""
    k, d = centers.shape
    covs = np.empty((k, d, d))
    for j in range(k):
        w = weights[:, j]
        total = w.sum()
        denom = total - 1.0 if unbiased else total
        if denom > 0:
            covs[j] = scatter(X, centers[j], w) / denom
        else:
            covs[j] = 0.0
        covs[j][np.diag_indices(d)] += ridge_abs
    return covs


@dataclass
class HardClustering:
    centroids: np.ndarray
    assignment: np.ndarray
    covariances: np.ndarray
    inertia: float
    inertia_trace: List[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    def predict(self, X) -> np.ndarray:
        return np.argmin(sq_distances(np.asarray(X, dtype=np.float64), self.centroids), axis=1)


@dataclass
class FuzzyClustering:
    centroids: np.ndarray
    memberships: np.ndarray
    covariances: np.ndarray
    m: float
    objective_trace: List[float] = field(default_factory=list)
    n_iter: int = 0

    @property
    def n_clusters(self) -> int:
        return self.centroids.shape[0]

    def predict_memberships(self, X) -> np.ndarray:
        return fuzzy_memberships(sq_distances(np.asarray(X, dtype=np.float64), self.centroids), self.m)


def kmeans_fit(samples, K: int, seed: int = 0, max_iter: int = 100, ridge: float = 1e-6) -> HardClustering:
    """Lloyd's algorithm from k-means++ seeds.

    Empty clusters are re-seeded at the sample farthest from its centroid.
    Cluster covariances carry a ridge relative to the global data variance.
    """
    X = check_samples(samples)
    n = X.shape[0]
    K = check_int(K, "K", low=1)
    if K > n:
        raise ParameterError(f"K={K} exceeds sample count {n}")
    rng = np.random.default_rng(seed)
    centers = kmeans_plusplus(X, K, rng)
    trace: List[float] = []
    labels = None
    it = 0
    for it in range(1, max_iter + 1):
        d2 = sq_distances(X, centers)
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=K)
        for j in np.flatnonzero(counts == 0):
            own = d2[np.arange(n), new_labels]
            # only steal from clusters that keep at least one member
            own = np.where(counts[new_labels] > 1, own, -1.0)
            far = int(np.argmax(own))
            counts[new_labels[far]] -= 1
            new_labels[far] = j
            counts[j] = 1
            d2[far] = 0.0
            logger.debug("k-means: re-seeded empty cluster %d from sample %d", j, far)
        converged = labels is not None and np.array_equal(new_labels, labels)
        labels = new_labels
        if converged:
            break
        for j in range(K):
            centers[j] = X[labels == j].mean(axis=0)
        trace.append(float(sq_distances(X, centers)[np.arange(n), labels].sum()))
    inertia = float(sq_distances(X, centers)[np.arange(n), labels].sum())
    onehot = np.zeros((n, K))
    onehot[np.arange(n), labels] = 1.0
    covs = _cluster_covariances(X, centers, onehot, ridge_scale(X, ridge), unbiased=True)
    return HardClustering(centroids=centers, assignment=labels, covariances=covs,
                          inertia=inertia, inertia_trace=trace, n_iter=it)


def fuzzy_memberships(d2: np.ndarray, m: float) -> np.ndarray:
    """Memberships ``u_ik ~ d_ik^(-2/(m-1))``; coincident samples get one-hot rows."""
    d2 = np.asarray(d2, dtype=np.float64)
    zero = d2 == 0
    hit = zero.any(axis=1)
    u = np.empty_like(d2)
    if (~hit).any():
        dd = d2[~hit]
        ratio = dd / dd.min(axis=1, keepdims=True)
        w = ratio ** (-1.0 / (m - 1.0))
        u[~hit] = w / w.sum(axis=1, keepdims=True)
    if hit.any():
        z = zero[hit].astype(np.float64)
        u[hit] = z / z.sum(axis=1, keepdims=True)
    return u


def fcm_objective(X, centers, u, m) -> float:
    return float(((u ** m) * sq_distances(X, centers)).sum())


def fcm_fit(samples, K: int, m: float = 2.0, seed: int = 0, max_iter: int = 150,
            tol: float = 1e-6, ridge: float = 1e-6) -> FuzzyClustering:
    """Fuzzy c-means by alternating membership and centroid updates."""
    X = check_samples(samples)
    n = X.shape[0]
    K = check_int(K, "K", low=2)
    m = check_real(m, "m", low=1.0, low_open=True)
    if K > n:
        raise ParameterError(f"K={K} exceeds sample count {n}")
    rng = np.random.default_rng(seed)
    centers = kmeans_plusplus(X, K, rng)
    u_prev = None
    trace: List[float] = []
    it = 0
    for it in range(1, max_iter + 1):
        u = fuzzy_memberships(sq_distances(X, centers), m)
        if u_prev is not None and np.max(np.abs(u - u_prev)) < tol:
            break
        um = u ** m
        centers = (um.T @ X) / um.sum(axis=0)[:, None]
        trace.append(fcm_objective(X, centers, u, m))
        u_prev = u
    u = fuzzy_memberships(sq_distances(X, centers), m)
    covs = _cluster_covariances(X, centers, u ** m, ridge_scale(X, ridge), unbiased=False)
    return FuzzyClustering(centroids=centers, memberships=u, covariances=covs, m=m,
                           objective_trace=trace, n_iter=it)

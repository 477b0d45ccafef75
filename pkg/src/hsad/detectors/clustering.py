"""Mixture and cluster-based detectors: GM-RX, CBAD, FCBAD."""
from __future__ import annotations

import numpy as np

from .._validation import check_int, check_real
from ..exceptions import ParameterError
from ..numerics.cluster import fcm_fit, kmeans_fit
from ..numerics.gmm import gmm_fit, gmm_nll
from ..numerics.mahalanobis import MahalanobisStats, cholesky_or_raise
from ..pca import pca_fit
from .base import BaseDetector, as_image, pixels_of


def _cluster_stats(centroids, covariances, ridge):
    return [MahalanobisStats(center=c, chol=cholesky_or_raise(S, ridge), ridge=ridge)
            for c, S in zip(centroids, covariances)]


class GMRX(BaseDetector):
    """Negative log-likelihood under a Gaussian mixture fitted in PCA space.

    Pixels are reduced to ``min(bands, max_dims)`` principal components first.
    """

    detector_id = "GM_RX"

    def __init__(self, n_components=3, max_dims=30, random_state=0, ridge=1e-6, max_iter=200):
        self.n_components = n_components
        self.max_dims = max_dims
        self.random_state = random_state
        self.ridge = ridge
        self.max_iter = max_iter

    def _check_params(self):
        check_int(self.n_components, "n_components", low=1)
        check_int(self.max_dims, "max_dims", low=1)
        check_real(self.ridge, "ridge", low=0)

    def _fit(self, X):
        P = pixels_of(X)
        d = min(X.shape[2], self.max_dims)
        if P.shape[0] < self.n_components * (d + 1):
            raise ParameterError(
                f"GM_RX needs >= {self.n_components * (d + 1)} pixels for K={self.n_components} in {d} dims")
        self.pca_ = pca_fit(P, d)
        self.gmm_ = gmm_fit(self.pca_.transform(P), self.n_components, seed=self.random_state,
                            max_iter=self.max_iter, ridge=self.ridge)

    def _score(self, X):
        return as_image(gmm_nll(self.gmm_, self.pca_.transform(pixels_of(X))), X)


class CBAD(BaseDetector):
    """Cluster-based detector: Mahalanobis distance within the assigned k-means cluster."""

    detector_id = "CBAD"

    def __init__(self, n_clusters=8, random_state=0, ridge=1e-6, max_iter=100):
        self.n_clusters = n_clusters
        self.random_state = random_state
        self.ridge = ridge
        self.max_iter = max_iter

    def _check_params(self):
        check_int(self.n_clusters, "n_clusters", low=1)
        check_real(self.ridge, "ridge", low=0)

    def _fit(self, X):
        P = pixels_of(X)
        if P.shape[0] < self.n_clusters:
            raise ParameterError(f"CBAD needs >= {self.n_clusters} pixels")
        self.clustering_ = kmeans_fit(P, self.n_clusters, seed=self.random_state,
                                      max_iter=self.max_iter, ridge=self.ridge)
        self.stats_ = _cluster_stats(self.clustering_.centroids, self.clustering_.covariances, self.ridge)

    def _score(self, X):
        P = pixels_of(X)
        labels = self.clustering_.predict(P)
        out = np.empty(P.shape[0])
        for j, st in enumerate(self.stats_):
            sel = labels == j
            if sel.any():
                out[sel] = st.distance2(P[sel])
        return as_image(out, X)


class FCBAD(BaseDetector):
    """Fuzzy CBAD: membership-weighted sum of per-cluster Mahalanobis distances."""

    detector_id = "FCBAD"

    def __init__(self, n_clusters=8, m=2.0, random_state=0, ridge=1e-6, max_iter=150, tol=1e-6):
        self.n_clusters = n_clusters
        self.m = m
        self.random_state = random_state
        self.ridge = ridge
        self.max_iter = max_iter
        self.tol = tol

    def _check_params(self):
        check_int(self.n_clusters, "n_clusters", low=2)
        check_real(self.m, "m", low=1, low_open=True)
        check_real(self.ridge, "ridge", low=0)

    def _fit(self, X):
        P = pixels_of(X)
        if P.shape[0] < self.n_clusters:
            raise ParameterError(f"FCBAD needs >= {self.n_clusters} pixels")
        self.clustering_ = fcm_fit(P, self.n_clusters, m=self.m, seed=self.random_state,
                                   max_iter=self.max_iter, tol=self.tol, ridge=self.ridge)
        self.stats_ = _cluster_stats(self.clustering_.centroids, self.clustering_.covariances, self.ridge)

    def cluster_distances(self, P) -> np.ndarray:
        return np.stack([st.distance2(P) for st in self.stats_], axis=1)

    def _score(self, X):
        P = pixels_of(X)
        u = self.clustering_.predict_memberships(P)
        d2 = self.cluster_distances(P)
        # exact zeros where membership is zero, so coincident pixels score 0
        return as_image(np.where(u > 0, u * d2, 0.0).sum(axis=1), X)

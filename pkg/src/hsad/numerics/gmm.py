"""Gaussian mixture model fitted by EM with a ridge prior on covariances."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .._validation import check_int, check_samples
from ..exceptions import ParameterError, ShapeError
from .cluster import kmeans_fit
from .mahalanobis import cholesky_or_raise, ridge_scale

logger = logging.getLogger(__name__)

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass
class GmmModel:
    weights: np.ndarray      # (K,)
    means: np.ndarray        # (K, d)
    covariances: np.ndarray  # (K, d, d)
    log_likelihood_trace: List[float] = field(default_factory=list)
    ridge: float = 0.0
    n_iter: int = 0
    converged: bool = False

    def __post_init__(self):
        self._chol = None

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def n_features(self) -> int:
        return self.means.shape[1]

    @property
    def cholesky(self) -> np.ndarray:
        if self._chol is None:
            self._chol = np.stack([cholesky_or_raise(c, self.ridge) for c in self.covariances])
        return self._chol

    def component_log_density(self, X: np.ndarray) -> np.ndarray:
        """``log w_k + log N(x; mu_k, S_k)`` for every sample, shape ``(n, K)``."""
        return _weighted_log_density(X, self.weights, self.means, self.cholesky)

    def score_samples(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ShapeError(f"GMM has {self.n_features} features, input has {X.shape[1]}")
        return logsumexp(self.component_log_density(X), axis=1)


def _weighted_log_density(X, weights, means, chols) -> np.ndarray:
    n, d = X.shape
    out = np.empty((n, weights.shape[0]))
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    for k in range(weights.shape[0]):
        L = chols[k]
        z = solve_triangular(L, (X - means[k]).T, lower=True, check_finite=False)
        out[:, k] = logw[k] - 0.5 * (d * _LOG_2PI + np.einsum("ij,ij->j", z, z)) - np.log(np.diag(L)).sum()
    return out


def _m_step(X, resp, c_ridge):
    n, d = X.shape
    nk = resp.sum(axis=0)
    weights = nk / n
    means = (resp.T @ X) / np.maximum(nk, np.finfo(float).tiny)[:, None]
    covs = np.empty((resp.shape[1], d, d))
    for k in range(resp.shape[1]):
        D = X - means[k]
        covs[k] = (D * resp[:, k:k + 1]).T @ D
        covs[k][np.diag_indices(d)] += c_ridge
        covs[k] /= max(nk[k], np.finfo(float).tiny)
    return weights, means, covs


def gmm_fit(samples, K: int, seed: int = 0, max_iter: int = 200, tol: float = 1e-6,
            ridge: float = 1e-6) -> GmmModel:
    """Fit a ``K``-component full-covariance GMM.

    Initialized from :func:`kmeans_fit` with the same seed.  The covariance
    update is ``S_k + (N * eps / N_k) I`` with ``eps = ridge * trace(cov)/d``,
    the exact M-step of a ridge prior, so the recorded objective (mean
    log-likelihood plus the prior term) never decreases.
    """
    X = check_samples(samples)
    n, d = X.shape
    K = check_int(K, "K", low=1)
    if n < K * (d + 1):
        raise ParameterError(f"GMM with K={K} in {d} dims needs >= {K * (d + 1)} samples, got {n}")
    eps = ridge_scale(X, ridge)
    c_ridge = n * eps
    km = kmeans_fit(X, K, seed=seed, ridge=0.0)
    resp = np.zeros((n, K))
    resp[np.arange(n), km.assignment] = 1.0
    weights, means, covs = _m_step(X, resp, c_ridge)

    trace: List[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        chols = np.stack([cholesky_or_raise(c, eps) for c in covs])
        logp = _weighted_log_density(X, weights, means, chols)
        ll = logsumexp(logp, axis=1)
        penalty = 0.0
        if c_ridge > 0:
            for L in chols:
                Linv = solve_triangular(L, np.eye(d), lower=True, check_finite=False)
                penalty += 0.5 * eps * float(np.sum(Linv * Linv))
        objective = float(ll.mean()) - penalty
        if trace and objective - trace[-1] < tol:
            trace.append(objective)
            converged = True
            break
        trace.append(objective)
        resp = np.exp(logp - ll[:, None])
        weights, means, covs = _m_step(X, resp, c_ridge)
        for k in np.flatnonzero(weights < 1e-12):
            worst = int(np.argmin(ll))
            logger.warning("GMM: component %d collapsed; re-seeding at sample %d", k, worst)
            means[k] = X[worst]
            covs[k] = np.cov(X, rowvar=False).reshape(d, d) + eps * np.eye(d)
            weights[k] = 1.0 / n
            weights /= weights.sum()
    return GmmModel(weights=weights, means=means, covariances=covs, log_likelihood_trace=trace,
                    ridge=eps, n_iter=it, converged=converged)


def gmm_nll(model: GmmModel, x) -> np.ndarray | float:
    """Negative log-likelihood ``-log sum_k w_k N(x; mu_k, S_k)``.

    Accepts one vector (returns a float) or an ``(n, d)`` batch.
    """
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single and model.n_features != arr.shape[0]:
        raise ShapeError(f"GMM has {model.n_features} features, input has {arr.shape[0]}")
    out = -model.score_samples(arr[None, :] if single else arr)
    return float(out[0]) if single else out

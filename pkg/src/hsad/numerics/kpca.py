"""RBF kernel PCA on a landmark subset with out-of-sample projection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .._validation import check_int, check_samples
from ..exceptions import ParameterError, ShapeError


@dataclass
class KernelPcaProjector:
    landmarks: np.ndarray       # (m, d)
    gamma: float
    alphas: np.ndarray          # (m, k) unit eigenvectors of the centered Gram matrix
    eigenvalues: np.ndarray     # (k,)
    gram_col_means: np.ndarray  # (m,)
    gram_mean: float
    landmark_index: np.ndarray  # indices of the landmarks in the fitting samples

    @property
    def n_components(self) -> int:
        return self.alphas.shape[1]

    def kernel(self, X: np.ndarray) -> np.ndarray:
        return np.exp(-self.gamma * cdist(X, self.landmarks, "sqeuclidean"))

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.landmarks.shape[1]:
            raise ShapeError(f"projector expects {self.landmarks.shape[1]} features, got {X.shape[1]}")
        out = np.empty((X.shape[0], self.n_components))
        scale = np.zeros_like(self.eigenvalues)
        keep = self.eigenvalues > 1e-12 * max(float(self.eigenvalues.max(initial=0.0)), 1e-300)
        scale[keep] = 1.0 / np.sqrt(self.eigenvalues[keep])
        proj = self.alphas * scale
        for start in range(0, X.shape[0], 8192):
            k = self.kernel(X[start:start + 8192])
            kc = k - k.mean(axis=1, keepdims=True) - self.gram_col_means + self.gram_mean
            out[start:start + 8192] = kc @ proj
        return out


def median_gamma(landmarks: np.ndarray) -> float:
    """``1 / (2 median^2)`` of pairwise landmark distances."""
    d = pdist(landmarks)
    med = float(np.median(d)) if d.size else 0.0
    if med <= 0:
        nz = d[d > 0]
        med = float(np.median(nz)) if nz.size else 1.0
    return 1.0 / (2.0 * med * med)


def kpca_fit(samples, k: int, seed: int = 0, landmark_count: int = 300,
             gamma: Optional[float] = None) -> KernelPcaProjector:
    """Fit kernel PCA on ``landmark_count`` uniformly drawn landmarks."""
    X = check_samples(samples)
    n = X.shape[0]
    k = check_int(k, "k", low=1)
    landmark_count = check_int(landmark_count, "landmark_count", low=1)
    if not k <= landmark_count <= n:
        raise ParameterError(f"need k ({k}) <= landmark_count ({landmark_count}) <= samples ({n})")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=landmark_count, replace=False))
    L = X[idx]
    if gamma is None:
        gamma = median_gamma(L)
    elif not gamma > 0:
        raise ParameterError(f"RBF gamma must be positive, got {gamma}")
    K = np.exp(-gamma * cdist(L, L, "sqeuclidean"))
    col = K.mean(axis=0)
    tot = float(K.mean())
    Kc = K - col[None, :] - col[:, None] + tot
    Kc = 0.5 * (Kc + Kc.T)
    evals, evecs = np.linalg.eigh(Kc)
    order = np.argsort(evals)[::-1][:k]
    evals = np.maximum(evals[order], 0.0)
    evecs = evecs[:, order]
    pivot = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivot, np.arange(evecs.shape[1])])
    signs[signs == 0] = 1.0
    evecs = evecs * signs
    return KernelPcaProjector(landmarks=L, gamma=float(gamma), alphas=evecs, eigenvalues=evals,
                              gram_col_means=col, gram_mean=tot, landmark_index=idx)


def kpca_transform(projector: KernelPcaProjector, x) -> np.ndarray:
    return projector.transform(x)

"""Principal components of the band-space covariance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_int
from .cube import HsiCube
from .exceptions import ParameterError, ShapeError


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray          # (bands,)
    components: np.ndarray    # (k, bands), rows orthonormal
    eigenvalues: np.ndarray   # (k,), descending, >= 0

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_bands(self) -> int:
        return self.mean.shape[0]

    def transform(self, X) -> np.ndarray:
        """Project samples ``(n, bands)`` or a cube ``(h, w, bands)``."""
        arr = X.data if isinstance(X, HsiCube) else np.asarray(X, dtype=np.float64)
        if arr.shape[-1] != self.n_bands:
            raise ShapeError(f"PCA model has {self.n_bands} bands, input has {arr.shape[-1]}")
        return (arr - self.mean) @ self.components.T

    def inverse_transform(self, Z) -> np.ndarray:
        return np.asarray(Z) @ self.components + self.mean


def covariance_eig(X: np.ndarray, mean: np.ndarray):
    """Eigenpairs of the sample covariance about ``mean`` (divisor N-1), descending."""
    Xc = X - mean
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order].T
    # deterministic sign: largest-magnitude entry of each component is positive
    idx = np.argmax(np.abs(evecs), axis=1)
    signs = np.sign(evecs[np.arange(evecs.shape[0]), idx])
    signs[signs == 0] = 1.0
    evecs = evecs * signs[:, None]
    evals = np.where(evals < 0, 0.0, evals)
    return evals, evecs


def pca_fit(X, k: int) -> PcaModel:
    """Fit PCA on a cube (all pixels) or a ``(n, bands)`` sample matrix."""
    samples = X.pixels() if isinstance(X, HsiCube) else np.asarray(X, dtype=np.float64)
    if samples.ndim == 3:
        samples = samples.reshape(-1, samples.shape[2])
    n, b = samples.shape
    k = check_int(k, "k")
    if not 1 <= k <= b:
        raise ParameterError(f"component count k must satisfy 1 <= k <= bands ({b}), got {k}")
    if n < 2:
        raise ParameterError("PCA needs at least 2 pixels")
    mean = samples.mean(axis=0)
    evals, evecs = covariance_eig(samples, mean)
    return PcaModel(mean=mean, components=np.ascontiguousarray(evecs[:k]), eigenvalues=evals[:k].copy())


def pca_transform(model: PcaModel, cube) -> np.ndarray:
    """Component images ``(k, height, width)`` for a cube."""
    arr = cube.data if isinstance(cube, HsiCube) else np.asarray(cube, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"expected a cube, got shape {arr.shape}")
    return np.moveaxis(model.transform(arr), -1, 0)

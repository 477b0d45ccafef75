"""Regularized Mahalanobis distance via Cholesky factors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .._validation import check_samples
from ..exceptions import ParameterError, ShapeError, SingularityError


def ridge_scale(X: np.ndarray, ridge: float) -> float:
    """Absolute ridge ``ridge * trace(cov) / d`` for data ``X``.

    Falls back to ``ridge`` itself when the data has zero variance, so a
    constant input still yields a factorizable covariance.
    """
    if ridge == 0:
        return 0.0
    var = X.var(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    scale = float(var.mean())
    return ridge * scale if scale > 0 else float(ridge)


def cholesky_or_raise(cov: np.ndarray, ridge: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        if ridge == 0:
            raise SingularityError("covariance is singular at ridge 0; raise the ridge") from None
        raise SingularityError(f"covariance is not positive definite even with ridge {ridge:g}") from None


@dataclass(frozen=True)
class MahalanobisStats:
    center: np.ndarray
    chol: np.ndarray  # lower-triangular factor of the ridged covariance
    ridge: float

    @property
    def covariance(self) -> np.ndarray:
        return self.chol @ self.chol.T

    def whiten(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.center.shape[0]:
            raise ShapeError(f"dimension {X.shape[-1]} != {self.center.shape[0]}")
        flat = X.reshape(-1, X.shape[-1]) - self.center
        z = solve_triangular(self.chol, flat.T, lower=True, check_finite=False)
        return z.T.reshape(X.shape)

    def distance2(self, X) -> np.ndarray:
        """Squared distance ``(x-c)^T S^-1 (x-c)`` along the last axis."""
        z = self.whiten(X)
        return np.einsum("...i,...i->...", z, z)


def scatter(X: np.ndarray, center: np.ndarray, weights=None) -> np.ndarray:
    D = X - center
    if weights is None:
        return D.T @ D
    return (D * weights[:, None]).T @ D


def mahalanobis_stats(samples, center="mean", ridge: float = 0.0, relative: bool = False) -> MahalanobisStats:
    """Center and Cholesky factor of the (ridged) covariance of ``samples``.

    ``center`` is ``"mean"``, ``"median"`` or an explicit vector; the
    covariance is taken about that center with divisor N-1.  With
    ``relative=True`` the ridge is scaled by the mean per-feature variance.
    """
    X = check_samples(samples)
    if X.shape[0] < 2:
        raise ParameterError("Mahalanobis statistics need at least 2 samples")
    if ridge < 0:
        raise ParameterError(f"ridge must be >= 0, got {ridge}")
    if isinstance(center, str):
        if center == "mean":
            c = X.mean(axis=0)
        elif center == "median":
            c = np.median(X, axis=0)
        else:
            raise ParameterError(f"center must be 'mean' or 'median', got {center!r}")
    else:
        c = np.asarray(center, dtype=np.float64)
        if c.shape != (X.shape[1],):
            raise ShapeError(f"center has shape {c.shape}, expected ({X.shape[1]},)")
    eps = ridge_scale(X, ridge) if relative else float(ridge)
    cov = scatter(X, c) / (X.shape[0] - 1)
    cov[np.diag_indices_from(cov)] += eps
    return MahalanobisStats(center=c, chol=cholesky_or_raise(cov, eps), ridge=eps)

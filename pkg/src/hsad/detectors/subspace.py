"""Subspace detectors: SSRX, CSD and the local nearest-regularized-subspace LSUNRSORAD."""
from __future__ import annotations

import logging

import numpy as np

from .._validation import check_int, check_real
from ..exceptions import ParameterError
from ..numerics.mahalanobis import mahalanobis_stats, ridge_scale
from ..pca import pca_fit
from .base import BaseDetector, as_image, pixels_of

logger = logging.getLogger(__name__)


class SSRX(BaseDetector):
    """RX after discarding the ``remove_top_k`` highest-variance principal components."""

    detector_id = "SSRX"

    def __init__(self, remove_top_k=2, ridge=1e-6):
        self.remove_top_k = remove_top_k
        self.ridge = ridge

    def _check_params(self):
        check_int(self.remove_top_k, "remove_top_k", low=1)
        check_real(self.ridge, "ridge", low=0)

    def _fit(self, X):
        b = X.shape[2]
        if self.remove_top_k >= b:
            raise ParameterError(f"remove_top_k must be < bands ({b}), got {self.remove_top_k}")
        P = pixels_of(X)
        full = pca_fit(P, b)
        self.pca_ = full
        self.residual_components_ = full.components[self.remove_top_k:]
        Z = (P - full.mean) @ self.residual_components_.T
        # ridge relative to the full-band scale, so clutter-only data stays flat
        eps = ridge_scale(P, self.ridge)
        self.stats_ = mahalanobis_stats(Z, center="mean", ridge=eps)

    def _score(self, X):
        Z = (pixels_of(X) - self.pca_.mean) @ self.residual_components_.T
        return as_image(self.stats_.distance2(Z), X)


class CSD(BaseDetector):
    """Complementary subspace detector.

    The leading components holding ``background_variance_fraction`` of the
    variance span the background; the score is the whitened energy in the
    complementary subspace minus the whitened energy in the background one.
    """

    detector_id = "CSD"

    def __init__(self, background_variance_fraction=0.9):
        self.background_variance_fraction = background_variance_fraction

    def _check_params(self):
        check_real(self.background_variance_fraction, "background_variance_fraction",
                   low=0, high=1, low_open=True, high_open=True)

    def _fit(self, X):
        P = pixels_of(X)
        self.pca_ = pca_fit(P, X.shape[2])
        ev = self.pca_.eigenvalues
        total = ev.sum()
        if total > 0:
            frac = np.cumsum(ev) / total
            k = int(np.searchsorted(frac, self.background_variance_fraction - 1e-12) + 1)
        else:
            k = 1
        self.n_background_ = min(k, X.shape[2] - 1)
        self.whitening_ = 1.0 / np.sqrt(np.maximum(ev, 1e-12))

    def _score(self, X):
        z = ((pixels_of(X) - self.pca_.mean) @ self.pca_.components.T) * self.whitening_
        k = self.n_background_
        e = z * z
        return as_image(e[:, k:].sum(axis=1) - e[:, :k].sum(axis=1), X)


def _ring_offsets(inner: int, outer: int) -> np.ndarray:
    ri, ro = inner // 2, outer // 2
    dy, dx = np.mgrid[-ro:ro + 1, -ro:ro + 1]
    ring = np.maximum(np.abs(dy), np.abs(dx)) > ri
    return np.stack([dy[ring], dx[ring]], axis=1)


def ring_residuals(X, inner: int, outer: int, lam: float, outlier_frac: float, chunk: int = 1024):
    """Ridge-regression residual of every pixel on its dual-window ring atoms.

    Returns ``(residuals, empty)`` where ``empty`` flags pixels left without
    atoms after clipping and outlier removal (their residual is NaN).
    """
    h, w, b = X.shape
    offs = _ring_offsets(inner, outer)
    n_off = offs.shape[0]
    yy, xx = np.divmod(np.arange(h * w), w)
    P = pixels_of(X)
    res = np.empty(h * w)
    eye = np.eye(n_off)
    for start in range(0, h * w, chunk):
        sl = slice(start, min(start + chunk, h * w))
        ay = yy[sl, None] + offs[None, :, 0]
        ax = xx[sl, None] + offs[None, :, 1]
        valid = (ay >= 0) & (ay < h) & (ax >= 0) & (ax < w)
        idx = np.where(valid, ay * w + ax, 0)
        A = P[idx] * valid[:, :, None]  # (c, n_off, b); invalid atoms are zero columns
        n_valid = valid.sum(axis=1)
        if outlier_frac > 0:
            mean = A.sum(axis=1) / np.maximum(n_valid, 1)[:, None]
            dist = np.linalg.norm(A - mean[:, None, :], axis=2)
            dist = np.where(valid, dist, -np.inf)
            n_drop = np.ceil(outlier_frac * n_valid - 1e-12).astype(int)
            # stable descending rank: farthest atoms first, ties by ring order
            order = np.argsort(-dist, axis=1, kind="stable")
            rank = np.empty_like(order)
            np.put_along_axis(rank, order, np.arange(n_off)[None, :], axis=1)
            keep = valid & (rank >= n_drop[:, None])
            A = A * keep[:, :, None]
            n_valid = keep.sum(axis=1)
        y = P[sl]
        G = np.einsum("cnb,cmb->cnm", A, A) + lam * eye
        rhs = np.einsum("cnb,cb->cn", A, y)
        wts = np.linalg.solve(G, rhs[:, :, None])[:, :, 0]
        r = y - np.einsum("cnb,cn->cb", A, wts)
        out = np.einsum("cb,cb->c", r, r)
        out[n_valid == 0] = np.nan
        res[sl] = out
    return res.reshape(h, w), np.isnan(res).reshape(h, w)


class LSUNRSORAD(BaseDetector):
    """Multi-scale local summation of nearest-regularized-subspace residuals.

    At every scale ``(inner, outer)`` the atoms of a pixel are the spectra in
    the outer window outside the inner one.  The ``ceil(outlier_frac * n)``
    atoms farthest from the atom mean are dropped before the ridge fit.
    """

    detector_id = "LSUNRSORAD"

    def __init__(self, scales=((3, 5), (5, 7), (7, 9)), lam=0.01, outlier_frac=0.1):
        self.scales = scales
        self.lam = lam
        self.outlier_frac = outlier_frac

    def _check_params(self):
        if not self.scales:
            raise ParameterError("LSUNRSORAD needs at least one (inner, outer) scale")
        for pair in self.scales:
            if len(pair) != 2:
                raise ParameterError(f"scale {pair!r} is not an (inner, outer) pair")
            inner = check_int(pair[0], "inner window", low=1)
            outer = check_int(pair[1], "outer window", low=3)
            if inner % 2 == 0 or outer % 2 == 0:
                raise ParameterError(f"windows must be odd, got ({inner}, {outer})")
            if inner >= outer:
                raise ParameterError(f"inner window must be < outer, got ({inner}, {outer})")
        check_real(self.lam, "lam", low=0, low_open=True)
        check_real(self.outlier_frac, "outlier_frac", low=0, high=0.5, high_open=True)

    def _score(self, X):
        h, w, _ = X.shape
        total = np.zeros((h, w))
        for inner, outer in self.scales:
            if outer > min(h, w):
                raise ParameterError(f"outer window {outer} exceeds min(width, height) = {min(h, w)}")
            res, empty = ring_residuals(X, inner, outer, self.lam, self.outlier_frac)
            if empty.any():
                fill = float(np.nanmax(res)) if not empty.all() else 0.0
                logger.info("LSUNRSORAD: %d pixels without atoms at scale (%d, %d)",
                            int(empty.sum()), inner, outer)
                res[empty] = fill
            total += res
        return total

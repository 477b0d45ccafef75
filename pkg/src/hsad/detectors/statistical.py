"""Global and sliding-window RX detectors."""
from __future__ import annotations

import logging

import numpy as np

from .._validation import check_int, check_real
from ..exceptions import ParameterError, SingularityError
from ..numerics.mahalanobis import mahalanobis_stats, ridge_scale
from .base import BaseDetector, as_image, pixels_of

logger = logging.getLogger(__name__)


class RX(BaseDetector):
    """Reed-Xiaoli: squared Mahalanobis distance to the scene statistics.

    Parameters
    ----------
    center : {"mean", "median"}
        Location estimate of the background.
    ridge : float
        Diagonal loading relative to the mean band variance.
    """

    detector_id = "RX"

    def __init__(self, center="mean", ridge=1e-6):
        self.center = center
        self.ridge = ridge

    def _check_params(self):
        if self.center not in ("mean", "median"):
            raise ParameterError(f"center must be 'mean' or 'median', got {self.center!r}")
        check_real(self.ridge, "ridge", low=0)

    def _fit(self, X):
        P = pixels_of(X)
        if P.shape[0] < P.shape[1] + 1:
            logger.warning("%s: %d pixels for %d bands; the ridge dominates the covariance",
                           self.detector_id, P.shape[0], P.shape[1])
        self.stats_ = mahalanobis_stats(P, center=self.center, ridge=self.ridge, relative=True)

    def _score(self, X):
        return as_image(self.stats_.distance2(pixels_of(X)), X)


class MDRX(RX):
    """RX with the per-band median as background center."""

    detector_id = "MD_RX"

    def __init__(self, center="median", ridge=1e-6):
        super().__init__(center=center, ridge=ridge)


def _window_bounds(n: int, radius: int):
    i = np.arange(n)
    return np.maximum(i - radius, 0), np.minimum(i + radius + 1, n)


class WinRX(BaseDetector):
    """RX against local statistics of a dual window.

    The background of each pixel is the ``window x window`` neighbourhood minus
    the ``guard x guard`` block around it, clipped at the image border.
    """

    detector_id = "WIN_RX"

    def __init__(self, window=15, guard=5, ridge=1e-6):
        self.window = window
        self.guard = guard
        self.ridge = ridge

    def _check_params(self):
        w = check_int(self.window, "window", low=3)
        g = check_int(self.guard, "guard", low=1)
        if w % 2 == 0:
            raise ParameterError(f"window must be odd, got {w}")
        if g % 2 == 0:
            raise ParameterError(f"guard must be odd, got {g}")
        if g >= w:
            raise ParameterError(f"guard ({g}) must be smaller than window ({w})")
        check_real(self.ridge, "ridge", low=0)

    def _score(self, X):
        h, w, b = X.shape
        if self.window > min(h, w):
            raise ParameterError(f"window ({self.window}) must be <= min(width, height) = {min(h, w)}")
        ro, rg = self.window // 2, self.guard // 2
        P = pixels_of(X)
        Xc = X - P.mean(axis=0)
        eps = ridge_scale(P, self.ridge)

        orow0, orow1 = _window_bounds(h, ro)
        grow0, grow1 = _window_bounds(h, rg)
        ocol0, ocol1 = _window_bounds(w, ro)
        gcol0, gcol1 = _window_bounds(w, rg)

        def row_outer(r):
            return np.einsum("wi,wj->wij", Xc[r], Xc[r])

        def col_window(a, c0, c1):
            cs = np.concatenate([np.zeros((1,) + a.shape[1:]), np.cumsum(a, axis=0)])
            return cs[c1] - cs[c0]

        # running column sums over the rows currently inside each window
        sums = {"o": [np.zeros((w, b)), np.zeros((w, b, b)), 0, 0],
                "g": [np.zeros((w, b)), np.zeros((w, b, b)), 0, 0]}

        def advance(key, r0, r1):
            acc = sums[key]
            while acc[3] < r1:
                acc[0] += Xc[acc[3]]
                acc[1] += row_outer(acc[3])
                acc[3] += 1
            while acc[2] < r0:
                acc[0] -= Xc[acc[2]]
                acc[1] -= row_outer(acc[2])
                acc[2] += 1
            return acc[0], acc[1]

        scores = np.empty((h, w))
        eye = np.eye(b)
        for i in range(h):
            o1, o2 = advance("o", orow0[i], orow1[i])
            g1, g2 = advance("g", grow0[i], grow1[i])
            s1 = col_window(o1, ocol0, ocol1) - col_window(g1, gcol0, gcol1)
            s2 = col_window(o2, ocol0, ocol1) - col_window(g2, gcol0, gcol1)
            n = ((orow1[i] - orow0[i]) * (ocol1 - ocol0)
                 - (grow1[i] - grow0[i]) * (gcol1 - gcol0)).astype(np.float64)
            mu = s1 / n[:, None]
            cov = (s2 - n[:, None, None] * np.einsum("wi,wj->wij", mu, mu)) / (n - 1)[:, None, None]
            cov += eps * eye
            diff = Xc[i] - mu
            try:
                L = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise SingularityError(
                    f"WIN_RX: local covariance singular in row {i}; raise the ridge") from None
            z = np.linalg.solve(L, diff[:, :, None])[:, :, 0]
            scores[i] = np.einsum("wi,wi->w", z, z)
        return scores

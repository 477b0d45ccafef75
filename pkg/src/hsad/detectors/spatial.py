"""AED: attribute filtering plus edge-preserving smoothing on leading components."""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .._validation import check_int, check_real
from ..cube import normalize_minmax
from ..exceptions import ParameterError
from ..pca import pca_fit, pca_transform
from .base import BaseDetector

_EIGHT = np.ones((3, 3), dtype=bool)


def box_mean(img: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the ``(2r+1)^2`` window, clipped at the border."""
    h, w = img.shape
    cs = np.zeros((h + 1, w + 1))
    cs[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    r0 = np.clip(np.arange(h) - radius, 0, h)
    r1 = np.clip(np.arange(h) + radius + 1, 0, h)
    c0 = np.clip(np.arange(w) - radius, 0, w)
    c1 = np.clip(np.arange(w) + radius + 1, 0, w)
    total = cs[r1][:, c1] - cs[r0][:, c1] - cs[r1][:, c0] + cs[r0][:, c0]
    count = np.outer(r1 - r0, c1 - c0)
    return total / count


def guided_filter(guide: np.ndarray, src: np.ndarray, radius: int, eps: float) -> np.ndarray:
    mean_i = box_mean(guide, radius)
    mean_p = box_mean(src, radius)
    var_i = box_mean(guide * guide, radius) - mean_i * mean_i
    cov_ip = box_mean(guide * src, radius) - mean_i * mean_p
    a = cov_ip / (var_i + eps)
    b = mean_p - a * mean_i
    return box_mean(a, radius) * guide + box_mean(b, radius)


def _binary_area_open(mask: np.ndarray, min_area: int) -> np.ndarray:
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return mask
    sizes = np.bincount(labels.ravel())
    keep = sizes >= min_area
    keep[0] = False
    return keep[labels]


def area_opening(levels_img: np.ndarray, n_levels: int, min_area: int) -> np.ndarray:
    """Grayscale area opening of an integer image by threshold decomposition."""
    out = np.zeros_like(levels_img)
    for t in range(1, n_levels):
        sel = levels_img >= t
        if not sel.any():
            break
        out += _binary_area_open(sel, min_area)
    return out


def area_closing(levels_img: np.ndarray, n_levels: int, min_area: int) -> np.ndarray:
    top = n_levels - 1
    return top - area_opening(top - levels_img, n_levels, min_area)


class AED(BaseDetector):
    """Attribute and edge-preserving filtering detector.

    Each of the ``pc_count`` normalized component images is quantized to
    ``levels`` grey levels and passed through an area opening followed by an
    area closing (8-connectivity, area threshold
    ``ceil(area_fraction * width * height)``).  The per-pixel maximum of
    the absolute residuals is smoothed by a guided filter whose guide is the
    first component image.
    """

    detector_id = "AED"

    def __init__(self, pc_count=2, area_fraction=0.002, levels=64, smooth_radius=4, smooth_eps=1e-4):
        self.pc_count = pc_count
        self.area_fraction = area_fraction
        self.levels = levels
        self.smooth_radius = smooth_radius
        self.smooth_eps = smooth_eps

    def _check_params(self):
        check_int(self.pc_count, "pc_count", low=1)
        check_real(self.area_fraction, "area_fraction", low=0, high=1, low_open=True, high_open=True)
        check_int(self.levels, "levels", low=8)
        check_int(self.smooth_radius, "smooth_radius", low=0)
        check_real(self.smooth_eps, "smooth_eps", low=0, low_open=True)

    def _fit(self, X):
        if self.pc_count > X.shape[2]:
            raise ParameterError(f"pc_count ({self.pc_count}) exceeds bands ({X.shape[2]})")

    def _score(self, X):
        h, w, _ = X.shape
        comps = pca_transform(pca_fit(X.reshape(-1, X.shape[2]), self.pc_count), X)
        min_area = math.ceil(self.area_fraction * h * w)
        top = self.levels - 1
        residual = np.zeros((h, w))
        guide = None
        for img in comps:
            norm = normalize_minmax(img)
            if guide is None:
                guide = norm
            q = np.rint(norm * top).astype(np.int64)
            filtered = area_closing(area_opening(q, self.levels, min_area), self.levels, min_area)
            residual = np.maximum(residual, np.abs(q - filtered) / top)
        return guided_filter(guide, residual, self.smooth_radius, self.smooth_eps)

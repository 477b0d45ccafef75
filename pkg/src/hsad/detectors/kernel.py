"""KIFD: isolation forest in an RBF kernel-PCA feature space."""
from __future__ import annotations

from .._validation import check_int
from ..exceptions import ParameterError
from ..numerics.iforest import iforest_fit
from ..numerics.kpca import kpca_fit
from .base import BaseDetector, as_image, pixels_of


class KIFD(BaseDetector):
    """Kernel isolation forest detector (global kernel-PCA features only)."""

    detector_id = "KIFD"

    def __init__(self, kpca_components=30, landmark_count=300, n_trees=100, subsample_size=256,
                 random_state=0):
        self.kpca_components = kpca_components
        self.landmark_count = landmark_count
        self.n_trees = n_trees
        self.subsample_size = subsample_size
        self.random_state = random_state

    def _check_params(self):
        k = check_int(self.kpca_components, "kpca_components", low=1)
        m = check_int(self.landmark_count, "landmark_count", low=1)
        check_int(self.n_trees, "n_trees", low=1)
        check_int(self.subsample_size, "subsample_size", low=1)
        if k > m:
            raise ParameterError(f"kpca_components ({k}) must be <= landmark_count ({m})")

    def _fit(self, X):
        P = pixels_of(X)
        if self.landmark_count > P.shape[0]:
            raise ParameterError(f"landmark_count ({self.landmark_count}) exceeds pixel count ({P.shape[0]})")
        self.projector_ = kpca_fit(P, self.kpca_components, seed=self.random_state,
                                   landmark_count=self.landmark_count)
        self.forest_ = iforest_fit(self.projector_.transform(P), seed=self.random_state,
                                   trees=self.n_trees, psi=self.subsample_size)

    def _score(self, X):
        return as_image(self.forest_.score_samples(self.projector_.transform(pixels_of(X))), X)

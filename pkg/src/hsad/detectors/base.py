"""Common estimator surface for the base anomaly detectors."""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_cube
from ..cube import HsiCube, ScoreMap
from ..exceptions import ShapeError


class BaseDetector(TransformerMixin, BaseEstimator):
    """An unsupervised detector mapping a cube to a ``(height, width)`` score image.

    ``fit`` learns whatever background model the detector needs from a cube and
    ``transform`` scores a cube with the same band count.  Higher scores mean
    more anomalous.  Local detectors (windows, spatial filters) learn nothing
    global and compute everything inside ``transform``.
    """

    detector_id: str = ""

    def _check_params(self) -> None:
        """Raise :class:`ParameterError` for out-of-range hyper-parameters."""

    def _fit(self, X) -> None:
        pass

    def _score(self, X):
        raise NotImplementedError

    def fit(self, X, y=None):
        self._check_params()
        X = check_cube(X)
        self.n_bands_ = X.shape[2]
        self._fit(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "n_bands_")
        X = check_cube(X)
        if X.shape[2] != self.n_bands_:
            raise ShapeError(f"{self.detector_id}: fitted on {self.n_bands_} bands, input has {X.shape[2]}")
        return self._score(X)

    def detect(self, cube) -> ScoreMap:
        """Fit on ``cube`` and score it, returning a :class:`ScoreMap`."""
        scores = self.fit(cube).transform(cube)
        return ScoreMap(scores, source=self.detector_id)


def pixels_of(X):
    return X.reshape(-1, X.shape[2])


def as_image(values, X):
    return values.reshape(X.shape[0], X.shape[1])


def is_cube(X) -> bool:
    return isinstance(X, HsiCube)

"""Input validation helpers shared by estimators."""
from __future__ import annotations

from numbers import Integral, Real

import numpy as np

from .cube import HsiCube, ScoreMap, TruthMask
from .exceptions import DataError, ParameterError, ShapeError


def check_cube(X) -> np.ndarray:
    """Return ``X`` as a finite float64 ``(height, width, bands)`` array.

    Accepts an :class:`HsiCube` or anything array-like with three axes.
    """
    if isinstance(X, HsiCube):
        return X.data
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"expected a (height, width, bands) cube, got shape {arr.shape}")
    if arr.shape[2] < 2:
        raise ShapeError(f"cube needs at least 2 bands, got {arr.shape[2]}")
    if not np.all(np.isfinite(arr)):
        raise DataError("cube contains non-finite values")
    return arr


def check_samples(X, min_samples: int = 1) -> np.ndarray:
    """2-D ``(n_samples, n_features)`` finite float array."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ShapeError(f"expected 2-D samples, got shape {arr.shape}")
    if arr.shape[0] < min_samples:
        raise ParameterError(f"need at least {min_samples} samples, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DataError("samples contain non-finite values")
    return arr


def check_scores(scores) -> np.ndarray:
    if isinstance(scores, ScoreMap):
        return scores.scores
    arr = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DataError("scores contain non-finite values")
    return arr


def check_labels(truth) -> np.ndarray:
    if isinstance(truth, TruthMask):
        return truth.labels
    return np.asarray(truth).astype(bool)


def check_int(value, name: str, low=None, high=None) -> int:
    if isinstance(value, bool) or not isinstance(value, Integral):
        raise ParameterError(f"{name} must be an integer, got {value!r}")
    if low is not None and value < low:
        raise ParameterError(f"{name} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ParameterError(f"{name} must be <= {high}, got {value}")
    return int(value)


def check_real(value, name: str, low=None, high=None, low_open=False, high_open=False) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ParameterError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (low_open and value == low)):
        raise ParameterError(f"{name} must be {'>' if low_open else '>='} {low}, got {value}")
    if high is not None and (value > high or (high_open and value == high)):
        raise ParameterError(f"{name} must be {'<' if high_open else '<='} {high}, got {value}")
    return value

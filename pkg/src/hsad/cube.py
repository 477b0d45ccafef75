"""In-memory data model: spectral cubes, score maps and truth masks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import DataError, ShapeError


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HsiCube:
    """A hyperspectral image stored pixel-major as ``(height, width, bands)``.

    Each pixel's spectrum is contiguous in memory.  The array is made
    read-only on construction.
    """

    data: np.ndarray
    wavelengths: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3:
            raise ShapeError(f"cube data must be 3-D (height, width, bands), got shape {data.shape}")
        h, w, b = data.shape
        if h < 1 or w < 1 or b < 2:
            raise ShapeError(f"cube needs height>=1, width>=1, bands>=2; got {data.shape}")
        if not np.all(np.isfinite(data)):
            first = int(np.flatnonzero(~np.isfinite(data.ravel()))[0])
            raise DataError(f"cube contains non-finite values (first at flat index {first})")
        object.__setattr__(self, "data", _frozen(data))
        if self.wavelengths is not None:
            wl = np.asarray(self.wavelengths, dtype=np.float64)
            if wl.shape != (b,):
                raise ShapeError(f"wavelengths length {wl.size} != bands {b}")
            object.__setattr__(self, "wavelengths", _frozen(wl))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def bands(self) -> int:
        return self.data.shape[2]

    @property
    def n_pixels(self) -> int:
        return self.height * self.width

    def pixels(self) -> np.ndarray:
        """Return the ``(n_pixels, bands)`` view of the data."""
        return self.data.reshape(-1, self.bands)

    def with_data(self, data: np.ndarray) -> "HsiCube":
        return HsiCube(data, wavelengths=None, name=self.name)


@dataclass(frozen=True)
class ScoreMap:
    """Per-pixel anomaly scores, higher meaning more anomalous."""

    scores: np.ndarray
    source: str = ""
    normalized: bool = False

    def __post_init__(self):
        s = np.asarray(self.scores, dtype=np.float64)
        if s.ndim != 2:
            raise ShapeError(f"score map must be 2-D (height, width), got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise DataError(f"score map '{self.source}' contains non-finite values")
        object.__setattr__(self, "scores", _frozen(s))

    @property
    def height(self) -> int:
        return self.scores.shape[0]

    @property
    def width(self) -> int:
        return self.scores.shape[1]

    def normalize(self) -> "ScoreMap":
        return ScoreMap(normalize_minmax(self.scores), source=self.source, normalized=True)


@dataclass(frozen=True)
class TruthMask:
    """Binary ground truth, ``True`` marking anomalous pixels."""

    labels: np.ndarray

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.ndim != 2:
            raise ShapeError(f"truth mask must be 2-D, got shape {lab.shape}")
        object.__setattr__(self, "labels", _frozen(lab.astype(bool)))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def n_anomalous(self) -> int:
        return int(self.labels.sum())


@dataclass
class Scene:
    """A cube paired with optional truth and the dataset it belongs to."""

    cube: HsiCube
    truth: Optional[TruthMask] = None
    dataset: str = ""
    name: str = field(default="")

    def __post_init__(self):
        if not self.name:
            self.name = self.cube.name
        if not self.dataset:
            self.dataset = self.name
        if self.truth is not None and self.truth.labels.shape != self.cube.data.shape[:2]:
            raise ShapeError(
                f"truth mask {self.truth.labels.shape} does not match cube {self.cube.data.shape[:2]}"
            )


def normalize_minmax(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Affinely map ``values`` onto [0, 1]; constant input maps to zeros."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise DataError("cannot normalize an empty sequence")
    if not np.all(np.isfinite(v)):
        raise DataError("cannot normalize non-finite values")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    out = (v - lo) / (hi - lo)
    # pin the extremes exactly and keep every other value strictly inside, so
    # argmin/argmax survive rounding
    inner = (v != lo) & (v != hi)
    out[inner] = np.clip(out[inner], np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    out[v == lo] = 0.0
    out[v == hi] = 1.0
    return out

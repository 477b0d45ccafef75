"""Meta-feature assembly and the per-scene base-map cache."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .._validation import check_cube, check_int, check_scores
from ..cube import HsiCube, Scene, normalize_minmax
from ..exceptions import HsadError, ParameterError, ShapeError
from ..pca import pca_fit

logger = logging.getLogger(__name__)

PASSTHROUGH_KINDS = ("pcs", "channels")


@dataclass(frozen=True)
class Passthrough:
    """Raw-data features appended to the base scores.

    ``kind='pcs'`` gives ``count`` scene-local principal component images;
    ``kind='channels'`` gives ``count`` bands drawn without replacement from
    ``seed``.  Both are min-max normalized per scene.
    """

    kind: str = "pcs"
    count: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PASSTHROUGH_KINDS:
            raise ParameterError(f"passthrough kind must be one of {PASSTHROUGH_KINDS}, got {self.kind!r}")
        check_int(self.count, "passthrough count", low=0)

    @classmethod
    def ten_pcs(cls) -> "Passthrough":
        return cls("pcs", 10, 0)

    @classmethod
    def random_channels(cls, seed: int = 0, count: int = 30) -> "Passthrough":
        return cls("channels", count, seed)

    def channel_indices(self, bands: int) -> np.ndarray:
        if self.count > bands:
            raise ParameterError(
                f"cannot draw {self.count} distinct channels from {bands} bands; "
                "use the PCA passthrough or fewer channels")
        rng = np.random.default_rng(self.seed)
        return np.sort(rng.choice(bands, size=self.count, replace=False))

    def raw(self, X: np.ndarray) -> np.ndarray:
        """Un-normalized passthrough columns, shape ``(pixels, count)``."""
        h, w, b = X.shape
        P = X.reshape(-1, b)
        if self.count == 0:
            return np.zeros((h * w, 0))
        if self.kind == "pcs":
            if self.count > b:
                raise ParameterError(f"{self.count} principal components requested from {b} bands")
            return pca_fit(P, self.count).transform(P)
        return P[:, self.channel_indices(b)]

    def to_dict(self) -> dict:
        return {"kind": self.kind, "count": int(self.count), "seed": int(self.seed), "normalized": True}

    @classmethod
    def from_dict(cls, d) -> "Passthrough":
        return cls(d["kind"], int(d["count"]), int(d.get("seed", 0)))


def _norm_columns(cols: np.ndarray) -> Tuple[np.ndarray, List[List[float]]]:
    out = np.empty_like(cols)
    stats = []
    for j in range(cols.shape[1]):
        out[:, j] = normalize_minmax(cols[:, j])
        stats.append([float(cols[:, j].min()), float(cols[:, j].max())])
    return out, stats


def build_meta_features(cube, base_maps: Sequence, passthrough: Passthrough = Passthrough()):
    """Per-pixel ``[normalized base scores] ++ [normalized passthrough]``.

    Returns ``(features, stats)``: features has shape ``(pixels, len(maps) +
    passthrough.count)`` with every value in [0, 1]; stats records the
    scene's min/max of each column before normalization.
    """
    X = check_cube(cube)
    h, w, _ = X.shape
    maps = [check_scores(m) for m in base_maps]
    for i, m in enumerate(maps):
        if m.shape != (h, w):
            raise ShapeError(f"base map {i} has shape {m.shape}, cube is {(h, w)}")
    base = np.stack([m.ravel() for m in maps], axis=1) if maps else np.zeros((h * w, 0))
    nb, base_stats = _norm_columns(base)
    npt, pt_stats = _norm_columns(passthrough.raw(X))
    return np.hstack([nb, npt]), {"base": base_stats, "passthrough": pt_stats}


class ScoreCache:
    """Memo of base-detector maps per (scene, detector spec).

    ``enabled=False`` recomputes every time; results are identical either way
    because detectors are deterministic given their spec.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._store: Dict[tuple, np.ndarray] = {}
        self._alive: Dict[int, object] = {}
        self.hits = 0
        self.misses = 0

    def get(self, scene, spec) -> np.ndarray:
        cube = scene.cube if isinstance(scene, Scene) else scene
        key = (id(cube), spec.key)
        if self.enabled and key in self._store:
            self.hits += 1
            return self._store[key]
        self.misses += 1
        try:
            scores = np.asarray(spec.build().detect(cube).scores)
        except HsadError as e:
            raise type(e)(f"{spec.label}: {e}") from e
        if self.enabled:
            self._alive[id(cube)] = cube
            self._store[key] = scores
        return scores

    def __deepcopy__(self, memo):
        # clones of an ensemble keep sharing one cache
        return self

    def maps(self, scene, specs) -> List[np.ndarray]:
        return [self.get(scene, s) for s in specs]


def cube_of(scene) -> HsiCube:
    if isinstance(scene, Scene):
        return scene.cube
    if isinstance(scene, HsiCube):
        return scene
    return HsiCube(np.asarray(scene, dtype=np.float64))

"""Stacking ensembles: a GMM meta-model (UGE-AD) and a random-forest one (mGE-AD)."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .. import _textio
from .._validation import check_int
from ..cube import ScoreMap, Scene, normalize_minmax
from ..detectors import DetectorSpec
from ..exceptions import FormatError, ParameterError
from ..numerics.forest import ForestTree, RandomForestModel, rf_fit
from ..numerics.gmm import GmmModel, gmm_fit, gmm_nll
from .features import Passthrough, ScoreCache, build_meta_features, cube_of
from .fusion import average_fuse

MAX_BASES = 4
FORMAT_TAG = "hsad-stack-model"

UGE_DEFAULT_BASES = ("AED", "FCBAD", "GM_RX", "KIFD")
MGE_DEFAULT_BASES = ("GM_RX", "KIFD", "LSUNRSORAD", "MD_RX")


def as_specs(specs, seed: int = 0) -> List:
    """Turn ids into :class:`DetectorSpec`; spec-like objects pass through."""
    out = []
    for s in specs:
        out.append(DetectorSpec(s, seed=seed) if isinstance(s, str) else s)
    return out


def _check_bases(specs) -> None:
    if not specs:
        raise ParameterError("a stacking ensemble needs at least one base detector")
    if len(specs) > MAX_BASES:
        raise ParameterError(f"at most {MAX_BASES} base detectors, got {len(specs)}")
    keys = [s.label for s in specs]
    if len(set(keys)) != len(keys):
        raise ParameterError(f"base detector ids must be distinct, got {keys}")


def _base_maps(scene, specs, cache, given):
    if given is not None:
        maps = [np.asarray(getattr(m, "scores", m), dtype=np.float64) for m in given]
        if len(maps) != len(specs):
            raise ParameterError(f"{len(maps)} precomputed maps for {len(specs)} base detectors")
        return maps
    return (cache or ScoreCache(enabled=False)).maps(scene, specs)


@dataclass
class StackModel:
    """A fitted stacking ensemble.

    Meta-features are normalized scene-locally at apply time;
    ``norm_stats`` keeps the fit-time min/max of each training scene for the
    record.  The GMM meta pairs with the PCA passthrough and the forest with
    random channels.
    """

    base_specs: List
    meta_kind: str
    passthrough: Passthrough
    meta: Union[GmmModel, RandomForestModel]
    norm_stats: List[dict] = field(default_factory=list)
    gmm_k: int = 2
    seed: int = 0

    def __post_init__(self):
        _check_bases(self.base_specs)
        if self.meta_kind not in ("GMM", "RF"):
            raise ParameterError(f"meta_kind must be 'GMM' or 'RF', got {self.meta_kind!r}")
        want = "pcs" if self.meta_kind == "GMM" else "channels"
        if self.passthrough.kind != want:
            raise ParameterError(f"{self.meta_kind} meta-model pairs with the {want!r} passthrough")

    @property
    def n_features(self) -> int:
        return len(self.base_specs) + self.passthrough.count

    def features(self, scene, base_maps=None, cache: Optional[ScoreCache] = None) -> np.ndarray:
        maps = _base_maps(scene, self.base_specs, cache, base_maps)
        F, _ = build_meta_features(cube_of(scene), maps, self.passthrough)
        return F

    def apply(self, scene, base_maps=None, cache: Optional[ScoreCache] = None) -> ScoreMap:
        cube = cube_of(scene)
        F = self.features(scene, base_maps, cache)
        if self.meta_kind == "GMM":
            s = gmm_nll(self.meta, F)
        else:
            s = self.meta.predict_proba(F)
        return ScoreMap(s.reshape(cube.height, cube.width),
                        source="UGE_AD" if self.meta_kind == "GMM" else "MGE_AD")

    # serialization -----------------------------------------------------------------
    def to_dict(self) -> dict:
        for s in self.base_specs:
            if not isinstance(s, DetectorSpec):
                raise ParameterError(f"base detector {s.label!r} is not a registered detector spec")
        if self.meta_kind == "GMM":
            m = self.meta
            meta = {"weights": m.weights, "means": m.means, "covariances": m.covariances,
                    "ridge": float(m.ridge), "n_iter": int(m.n_iter), "converged": bool(m.converged),
                    "log_likelihood_trace": list(m.log_likelihood_trace)}
        else:
            meta = {"n_features": int(self.meta.n_features),
                    "trees": [t.to_dict() for t in self.meta.trees]}
        return {
            "format": FORMAT_TAG,
            "version": 1,
            "meta_kind": self.meta_kind,
            "gmm_k": int(self.gmm_k),
            "seed": int(self.seed),
            "base_specs": [s.to_dict() for s in self.base_specs],
            "passthrough": self.passthrough.to_dict(),
            "normalization": {"policy": "scene-local-minmax", "fit_stats": self.norm_stats},
            "meta": meta,
        }

    def to_text(self) -> str:
        return _textio.dumps(self.to_dict(), float_fmt="%.17g")

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_dict(cls, d: dict) -> "StackModel":
        if d.get("format") != FORMAT_TAG:
            raise FormatError(f"not a stack model document (format={d.get('format')!r})")
        kind = d["meta_kind"]
        m = d["meta"]
        if kind == "GMM":
            meta = GmmModel(weights=np.asarray(m["weights"], dtype=np.float64),
                            means=np.asarray(m["means"], dtype=np.float64),
                            covariances=np.asarray(m["covariances"], dtype=np.float64),
                            log_likelihood_trace=[float(v) for v in m["log_likelihood_trace"]],
                            ridge=float(m["ridge"]), n_iter=int(m["n_iter"]),
                            converged=bool(m["converged"]))
        else:
            meta = RandomForestModel([ForestTree.from_dict(t) for t in m["trees"]], int(m["n_features"]))
        return cls(base_specs=[DetectorSpec.from_dict(s) for s in d["base_specs"]], meta_kind=kind,
                   passthrough=Passthrough.from_dict(d["passthrough"]), meta=meta,
                   norm_stats=list(d["normalization"].get("fit_stats", [])),
                   gmm_k=int(d["gmm_k"]), seed=int(d["seed"]))

    @classmethod
    def from_text(cls, text: str) -> "StackModel":
        try:
            d = _textio.loads(text)
        except ValueError as e:
            raise FormatError(f"stack model is not valid JSON: {e}") from e
        try:
            return cls.from_dict(d)
        except KeyError as e:
            raise FormatError(f"stack model misses key {e}") from e

    @classmethod
    def load(cls, path) -> "StackModel":
        return cls.from_text(Path(path).read_text())


def _pooled_features(scenes, specs, passthrough, cache, base_maps):
    feats, stats = [], []
    for i, sc in enumerate(scenes):
        maps = _base_maps(sc, specs, cache, None if base_maps is None else base_maps[i])
        F, st = build_meta_features(cube_of(sc), maps, passthrough)
        feats.append(F)
        stats.append({"scene": getattr(sc, "name", "") or cube_of(sc).name, **st})
    return feats, stats


def uge_fit(scenes: Sequence, base_specs=UGE_DEFAULT_BASES, gmm_k: int = 2, seed: int = 0,
            n_pcs: int = 10, ridge: float = 1e-6, cache: Optional[ScoreCache] = None,
            base_maps=None) -> StackModel:
    """Fit the GMM meta-model on meta-features pooled over ``scenes``.

    No truth is used.  ``base_maps`` optionally supplies precomputed maps per
    scene (in ``base_specs`` order).
    """
    scenes = list(scenes)
    if not scenes:
        raise ParameterError("UGE-AD needs at least one training scene")
    specs = as_specs(base_specs, seed)
    _check_bases(specs)
    gmm_k = check_int(gmm_k, "gmm_k", low=1)
    pt = Passthrough("pcs", n_pcs, 0)
    feats, stats = _pooled_features(scenes, specs, pt, cache, base_maps)
    meta = gmm_fit(np.vstack(feats), gmm_k, seed=seed, ridge=ridge)
    return StackModel(specs, "GMM", pt, meta, stats, gmm_k, seed)


def uge_apply(model: StackModel, scene, base_maps=None, cache: Optional[ScoreCache] = None) -> ScoreMap:
    if model.meta_kind != "GMM":
        raise ParameterError("uge_apply needs a GMM stack model")
    return model.apply(scene, base_maps, cache)


def mge_fit(scenes: Sequence, base_specs=MGE_DEFAULT_BASES, seed: int = 0, n_channels: int = 30,
            trees: int = 200, cache: Optional[ScoreCache] = None, base_maps=None) -> StackModel:
    """Fit the random-forest meta-classifier on pooled (meta-feature, label) pairs."""
    scenes = list(scenes)
    if not scenes:
        raise ParameterError("mGE-AD needs at least one training scene")
    for sc in scenes:
        if not isinstance(sc, Scene) or sc.truth is None:
            raise ParameterError("mGE-AD training scenes need truth masks")
    specs = as_specs(base_specs, seed)
    _check_bases(specs)
    pt = Passthrough("channels", n_channels, seed)
    feats, stats = _pooled_features(scenes, specs, pt, cache, base_maps)
    labels = np.concatenate([sc.truth.labels.ravel() for sc in scenes])
    if labels.all() or not labels.any():
        raise ParameterError("mGE-AD training labels contain a single class")
    meta = rf_fit(np.vstack(feats), labels, seed=seed, trees=trees)
    return StackModel(specs, "RF", pt, meta, stats, 2, seed)


def mge_apply(model: StackModel, scene, base_maps=None, cache: Optional[ScoreCache] = None) -> ScoreMap:
    if model.meta_kind != "RF":
        raise ParameterError("mge_apply needs a random-forest stack model")
    return model.apply(scene, base_maps, cache)


class _EnsembleBase(BaseEstimator):
    """Shared estimator surface: ``fit(scenes)`` then ``transform(scene)``.

    ``transform`` returns a ``(height, width)`` score image for a scene or
    cube.  ``cache`` is shared, not copied, when the estimator is cloned.
    """

    def detect(self, scene) -> ScoreMap:
        return ScoreMap(self.transform(scene), source=type(self).__name__)

    def _specs(self):
        return as_specs(self.base_specs, self.random_state)


class UGEAD(_EnsembleBase):
    def __init__(self, base_specs=UGE_DEFAULT_BASES, n_components=2, n_pcs=10, ridge=1e-6,
                 random_state=0, cache=None):
        self.base_specs = base_specs
        self.n_components = n_components
        self.n_pcs = n_pcs
        self.ridge = ridge
        self.random_state = random_state
        self.cache = cache

    def fit(self, scenes, y=None, base_maps=None):
        self.model_ = uge_fit(scenes, self._specs(), self.n_components, self.random_state,
                              self.n_pcs, self.ridge, self.cache, base_maps)
        return self

    def transform(self, scene, base_maps=None):
        check_is_fitted(self, "model_")
        return np.asarray(self.model_.apply(scene, base_maps, self.cache).scores)


class MGEAD(_EnsembleBase):
    def __init__(self, base_specs=MGE_DEFAULT_BASES, n_channels=30, n_trees=200, random_state=0,
                 cache=None):
        self.base_specs = base_specs
        self.n_channels = n_channels
        self.n_trees = n_trees
        self.random_state = random_state
        self.cache = cache

    def fit(self, scenes, y=None, base_maps=None):
        self.model_ = mge_fit(scenes, self._specs(), self.random_state, self.n_channels,
                              self.n_trees, self.cache, base_maps)
        return self

    def transform(self, scene, base_maps=None):
        check_is_fitted(self, "model_")
        return np.asarray(self.model_.apply(scene, base_maps, self.cache).scores)


class AverageEnsemble(_EnsembleBase):
    """Mean of normalized base maps; a single base reduces to its normalized map."""

    def __init__(self, base_specs=("AED", "KIFD", "LSUNRSORAD"), random_state=0, cache=None):
        self.base_specs = base_specs
        self.random_state = random_state
        self.cache = cache

    def fit(self, scenes=None, y=None, base_maps=None):
        specs = self._specs()
        if not specs:
            raise ParameterError("average ensemble needs at least one base detector")
        self.specs_ = specs
        return self

    def transform(self, scene, base_maps=None):
        check_is_fitted(self, "specs_")
        maps = _base_maps(scene, self.specs_, self.cache, base_maps)
        if len(maps) == 1:
            return normalize_minmax(maps[0])
        return np.asarray(average_fuse(maps).scores)


BUILDERS = {"uge": UGEAD, "mge": MGEAD, "average": AverageEnsemble}

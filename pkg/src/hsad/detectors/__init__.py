"""The eleven base anomaly detectors and the :class:`DetectorSpec` dispatch."""
from __future__ import annotations

import inspect
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping

from ..cube import ScoreMap
from ..exceptions import ParameterError
from .base import BaseDetector
from .clustering import CBAD, FCBAD, GMRX
from .kernel import KIFD
from .spatial import AED
from .statistical import MDRX, RX, WinRX
from .subspace import CSD, LSUNRSORAD, SSRX

REGISTRY: Dict[str, type] = {
    cls.detector_id: cls
    for cls in (RX, MDRX, WinRX, SSRX, CSD, GMRX, CBAD, FCBAD, AED, KIFD, LSUNRSORAD)
}
DETECTOR_IDS = tuple(REGISTRY)


def canonical_id(name: str) -> str:
    """Map user spellings such as ``win-rx`` or ``md_rx`` onto registry ids."""
    key = str(name).strip().upper().replace("-", "_")
    aliases = {"MDRX": "MD_RX", "WINRX": "WIN_RX", "GMRX": "GM_RX"}
    key = aliases.get(key, key)
    if key not in REGISTRY:
        raise ParameterError(f"unknown detector {name!r}; valid ids: {', '.join(DETECTOR_IDS)}")
    return key


def _accepts_seed(cls) -> bool:
    return "random_state" in inspect.signature(cls.__init__).parameters


@dataclass(frozen=True)
class DetectorSpec:
    """A detector id, its parameter overrides and a seed for stochastic detectors."""

    id: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "id", canonical_id(self.id))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def stochastic(self) -> bool:
        return _accepts_seed(REGISTRY[self.id])

    def build(self) -> BaseDetector:
        """Instantiate and validate the detector."""
        cls = REGISTRY[self.id]
        allowed = set(inspect.signature(cls.__init__).parameters) - {"self", "random_state"}
        unknown = set(self.params) - allowed
        if unknown:
            raise ParameterError(
                f"{self.id}: unknown parameter(s) {sorted(unknown)}; accepted: {sorted(allowed)}")
        kwargs = dict(self.params)
        if self.stochastic:
            kwargs["random_state"] = self.seed
        est = cls(**kwargs)
        est._check_params()
        return est

    def to_dict(self) -> dict:
        params = {k: (list(map(list, v)) if k == "scales" else v) for k, v in sorted(self.params.items())}
        return {"id": self.id, "params": params, "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DetectorSpec":
        params = dict(d.get("params", {}))
        if "scales" in params:
            params["scales"] = tuple(tuple(int(v) for v in p) for p in params["scales"])
        return cls(d["id"], params, int(d.get("seed", 0)))

    @property
    def key(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def label(self) -> str:
        return self.id


def detect(cube, spec: DetectorSpec | str) -> ScoreMap:
    """Run one detector on ``cube``; higher scores are more anomalous."""
    if isinstance(spec, str):
        spec = DetectorSpec(spec)
    smap = spec.build().detect(cube)
    return ScoreMap(smap.scores, source=spec.id)


def detect_rx(cube, center="mean", ridge=1e-6) -> ScoreMap:
    return RX(center=center, ridge=ridge).detect(cube)


def detect_win_rx(cube, window=15, guard=5, ridge=1e-6) -> ScoreMap:
    return WinRX(window=window, guard=guard, ridge=ridge).detect(cube)


def detect_ssrx(cube, remove_top_k=2, ridge=1e-6) -> ScoreMap:
    return SSRX(remove_top_k=remove_top_k, ridge=ridge).detect(cube)


def detect_csd(cube, background_variance_fraction=0.9) -> ScoreMap:
    return CSD(background_variance_fraction=background_variance_fraction).detect(cube)


def detect_gmrx(cube, K=3, seed=0, ridge=1e-6) -> ScoreMap:
    return GMRX(n_components=K, random_state=seed, ridge=ridge).detect(cube)


def detect_cbad(cube, K=8, seed=0, ridge=1e-6) -> ScoreMap:
    return CBAD(n_clusters=K, random_state=seed, ridge=ridge).detect(cube)


def detect_fcbad(cube, K=8, m=2.0, seed=0, ridge=1e-6) -> ScoreMap:
    return FCBAD(n_clusters=K, m=m, random_state=seed, ridge=ridge).detect(cube)


def detect_aed(cube, pc_count=2, area_fraction=0.002, levels=64, smooth_radius=4, smooth_eps=1e-4) -> ScoreMap:
    return AED(pc_count=pc_count, area_fraction=area_fraction, levels=levels,
               smooth_radius=smooth_radius, smooth_eps=smooth_eps).detect(cube)


def detect_kifd(cube, kpca_components=30, landmark_count=300, trees=100, psi=256, seed=0) -> ScoreMap:
    return KIFD(kpca_components=kpca_components, landmark_count=landmark_count, n_trees=trees,
                subsample_size=psi, random_state=seed).detect(cube)


def detect_lsunrsorad(cube, scales=((3, 5), (5, 7), (7, 9)), lam=0.01, outlier_frac=0.1) -> ScoreMap:
    return LSUNRSORAD(scales=scales, lam=lam, outlier_frac=outlier_frac).detect(cube)


__all__ = [
    "BaseDetector", "DetectorSpec", "REGISTRY", "DETECTOR_IDS", "canonical_id", "detect",
    "RX", "MDRX", "WinRX", "SSRX", "CSD", "GMRX", "CBAD", "FCBAD", "AED", "KIFD", "LSUNRSORAD",
    "detect_rx", "detect_win_rx", "detect_ssrx", "detect_csd", "detect_gmrx", "detect_cbad",
    "detect_fcbad", "detect_aed", "detect_kifd", "detect_lsunrsorad",
]

"""Hyperspectral anomaly detection: base detectors, stacking ensembles and evaluation."""
from .cube import HsiCube, Scene, ScoreMap, TruthMask, normalize_minmax
from .detectors import DETECTOR_IDS, DetectorSpec, detect
from .ensemble import (StackModel, average_fuse, greedy_search, mge_apply, mge_fit, uge_apply,
                       uge_fit, vote_fuse)
from .evaluation import cv_harness, f1_macro, roc_auc, threshold_otsu
from .exceptions import HsadError
from .io import load_envi, load_mask, save_envi, save_mask, save_scoremap, load_scoremap
from .synth import SceneSpec, gen_scene

__version__ = "0.1.0"

__all__ = [
    "HsiCube", "Scene", "ScoreMap", "TruthMask", "normalize_minmax", "DETECTOR_IDS", "DetectorSpec",
    "detect", "StackModel", "average_fuse", "vote_fuse", "greedy_search", "uge_fit", "uge_apply",
    "mge_fit", "mge_apply", "cv_harness", "f1_macro", "roc_auc", "threshold_otsu", "HsadError",
    "load_envi", "load_mask", "save_envi", "save_mask", "save_scoremap", "load_scoremap",
    "SceneSpec", "gen_scene",
]

"""Metrics, thresholds and the scene-level cross-validation harness."""
from .metrics import (binarize, f1_macro, f1_macro_at, resolve_threshold, roc_auc,
                      threshold_otsu, threshold_percentile)
from .cv import EvalReport, cv_harness, evaluate_maps, fold_partition

__all__ = [
    "roc_auc", "threshold_otsu", "threshold_percentile", "resolve_threshold", "binarize",
    "f1_macro", "f1_macro_at", "EvalReport", "cv_harness", "evaluate_maps", "fold_partition",
]

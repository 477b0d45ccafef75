"""Statistical learning primitives used by the detectors and meta-models."""
from .mahalanobis import MahalanobisStats, mahalanobis_stats, ridge_scale
from .gmm import GmmModel, gmm_fit, gmm_nll
from .cluster import HardClustering, FuzzyClustering, kmeans_fit, fcm_fit
from .iforest import IsolationForestModel, iforest_fit, iforest_score, average_path_length
from .kpca import KernelPcaProjector, kpca_fit, kpca_transform
from .forest import RandomForestModel, rf_fit, rf_proba

__all__ = [
    "MahalanobisStats", "mahalanobis_stats", "ridge_scale",
    "GmmModel", "gmm_fit", "gmm_nll",
    "HardClustering", "FuzzyClustering", "kmeans_fit", "fcm_fit",
    "IsolationForestModel", "iforest_fit", "iforest_score", "average_path_length",
    "KernelPcaProjector", "kpca_fit", "kpca_transform",
    "RandomForestModel", "rf_fit", "rf_proba",
]

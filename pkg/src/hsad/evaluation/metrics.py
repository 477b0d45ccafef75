"""ROC-AUC, thresholding rules and F1-macro for per-pixel anomaly scores."""
from __future__ import annotations

from typing import Callable, Union

import numpy as np
from scipy.stats import rankdata

from .._validation import check_int, check_labels, check_real, check_scores
from ..exceptions import EvaluationError, ParameterError, ShapeError

ThresholdRule = Union[str, float, Callable[[np.ndarray], float]]


def _paired(scores, truth):
    s = check_scores(scores).ravel()
    y = check_labels(truth).ravel()
    if s.shape != y.shape:
        raise ShapeError(f"{s.size} scores but {y.size} labels")
    n1 = int(y.sum())
    if n1 == 0 or n1 == y.size:
        raise EvaluationError("truth must contain both anomaly and background pixels")
    return s, y, n1


def roc_auc(scores, truth) -> float:
    """Area under the ROC curve from the midrank (Mann-Whitney) statistic.

    Ties between an anomaly and a background pixel count one half.
    """
    s, y, n1 = _paired(scores, truth)
    n0 = y.size - n1
    ranks = rankdata(s, method="average")
    return float((ranks[y].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def threshold_otsu(scores, bins: int = 256) -> float:
    """Bin edge of a ``bins``-bin histogram maximizing between-class variance.

    Pixels with ``score > t`` form the upper class.  When several edges reach
    the same maximum the middle one of the tied set is returned.  Constant
    input returns its value.
    """
    s = np.sort(check_scores(scores).ravel())
    bins = check_int(bins, "bins", low=2)
    lo, hi = s[0], s[-1]
    if lo == hi:
        return float(lo)
    edges = np.linspace(lo, hi, bins + 1)[:-1]
    n = s.size
    csum = np.concatenate([[0.0], np.cumsum(s - lo)])
    n0 = np.searchsorted(s, edges, side="right")
    n1 = n - n0
    sum0 = csum[n0]
    sum1 = csum[-1] - sum0
    with np.errstate(divide="ignore", invalid="ignore"):
        between = np.where((n0 > 0) & (n1 > 0),
                           n0 * n1 * (sum0 / n0 - sum1 / n1) ** 2, -np.inf)
    best = between.max()
    tied = np.flatnonzero(between >= best - 1e-12 * abs(best))
    return float(edges[tied[(tied.size - 1) // 2]])


def threshold_percentile(scores, q: float = 0.02) -> float:
    """The ``1 - q`` quantile, so roughly a fraction ``q`` lies above it."""
    q = check_real(q, "q", low=0, high=1)
    return float(np.quantile(check_scores(scores).ravel(), 1.0 - q))


def resolve_threshold(scores, rule: ThresholdRule = "otsu", q: float = 0.02) -> float:
    """Apply a threshold rule: ``'otsu'``, ``'percentile'``, a number or a callable."""
    if callable(rule):
        return float(rule(check_scores(scores)))
    if isinstance(rule, str):
        if rule == "otsu":
            return threshold_otsu(scores)
        if rule == "percentile":
            return threshold_percentile(scores, q)
        raise ParameterError(f"unknown threshold rule {rule!r}; use 'otsu' or 'percentile'")
    return check_real(rule, "threshold")


def binarize(scores, rule: ThresholdRule = "otsu", q: float = 0.02) -> np.ndarray:
    s = check_scores(scores)
    return s > resolve_threshold(s, rule, q)


def _f1(tp, fp, fn) -> float:
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2.0 * tp / denom


def f1_macro_at(scores, truth, threshold: float) -> float:
    s, y, _ = _paired(scores, truth)
    pred = s > threshold
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    tn = y.size - tp - fp - fn
    return 0.5 * (_f1(tp, fp, fn) + _f1(tn, fn, fp))


def f1_macro(scores, truth, rule: ThresholdRule = "otsu", q: float = 0.02) -> float:
    """Unweighted mean of anomaly-class and background-class F1 after thresholding."""
    return f1_macro_at(scores, truth, resolve_threshold(scores, rule, q))

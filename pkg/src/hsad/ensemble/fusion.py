"""Voting and averaging fusion of score maps."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .._validation import check_int, check_scores
from ..cube import ScoreMap, normalize_minmax
from ..evaluation.metrics import ThresholdRule, binarize
from ..exceptions import ParameterError, ShapeError


def _stack(maps) -> np.ndarray:
    maps = list(maps)
    if len(maps) < 2:
        raise ParameterError(f"fusion needs at least 2 score maps, got {len(maps)}")
    arrays = [check_scores(m) for m in maps]
    shape = arrays[0].shape
    for i, a in enumerate(arrays[1:], start=1):
        if a.shape != shape:
            raise ShapeError(f"map {i} has shape {a.shape}, expected {shape}")
    return np.stack(arrays)


def vote_fuse(maps: Sequence, rule: ThresholdRule = "otsu", min_votes: int = 2,
              q: float = 0.02) -> ScoreMap:
    """1 where at least ``min_votes`` binarized maps flag the pixel, else 0."""
    stack = _stack(maps)
    min_votes = check_int(min_votes, "min_votes", low=1)
    votes = np.zeros(stack.shape[1:], dtype=np.int64)
    for m in stack:
        votes += binarize(m, rule, q)
    out = (votes >= min_votes).astype(np.float64)
    return ScoreMap(out, source="vote", normalized=bool(out.min() != out.max()))


def average_fuse(maps: Sequence) -> ScoreMap:
    """Mean of the min-max normalized maps; the result is not re-normalized."""
    stack = _stack(maps)
    mean = np.mean([normalize_minmax(m) for m in stack], axis=0)
    return ScoreMap(mean, source="average", normalized=False)

"""Greedy forward selection of base detectors by cross-validated ROC-AUC."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Union

from .._validation import check_int, check_real
from ..exceptions import HsadError, ParameterError
from ..evaluation.cv import cv_harness
from .features import ScoreCache
from .stacking import BUILDERS, as_specs

logger = logging.getLogger(__name__)


@dataclass
class GreedyResult:
    selected: List
    round_scores: List[float]
    candidate_log: List[List[dict]] = field(default_factory=list)

    @property
    def selected_ids(self) -> List[str]:
        return [s.label for s in self.selected]

    def to_dict(self) -> dict:
        return {
            "selected": [s.to_dict() if hasattr(s, "to_dict") else {"id": s.label} for s in self.selected],
            "selected_ids": self.selected_ids,
            "round_scores": list(self.round_scores),
            "rounds": [[dict(c) for c in rnd] for rnd in self.candidate_log],
        }


def _make_builder(builder, specs, seed, cache, builder_params):
    if callable(builder) and not isinstance(builder, str):
        return builder(specs, cache)
    try:
        cls = BUILDERS[str(builder).lower()]
    except KeyError:
        raise ParameterError(f"unknown ensemble builder {builder!r}; use one of {sorted(BUILDERS)}") from None
    return cls(base_specs=tuple(specs), random_state=seed, cache=cache, **(builder_params or {}))


def greedy_search(candidates: Sequence, scenes: Sequence, builder: Union[str, Callable] = "uge",
                  folds: int = 2, repeats: int = 5, max_bases: int = 4, delta: float = 1e-4,
                  seed: int = 0, cache: bool = True, threads: int = 1,
                  builder_params: dict | None = None) -> GreedyResult:
    """Forward selection of up to ``max_bases`` detectors.

    Each round tries every unselected candidate together with the current
    selection, scores the ensemble by mean CV ROC-AUC and accepts the best
    one if it beats the incumbent by more than ``delta`` (the empty ensemble
    scores 0; ties go to the earlier candidate).  A candidate that fails on
    any scene is skipped for that round.

    ``builder`` is ``'uge'``, ``'mge'``, ``'average'`` or a factory
    ``(specs, cache) -> estimator``.
    """
    scenes = list(scenes)
    cands = as_specs(candidates, seed)
    if not cands:
        raise ParameterError("greedy search needs at least one candidate")
    if len(scenes) < 2:
        raise ParameterError(f"greedy search needs at least 2 scenes, got {len(scenes)}")
    folds = check_int(folds, "folds", low=2)
    if folds > len(scenes):
        raise ParameterError(f"{folds} folds exceed the {len(scenes)} available scenes")
    max_bases = check_int(max_bases, "max_bases", low=1, high=4)
    delta = check_real(delta, "delta", low=0)
    labels = [c.label for c in cands]
    if len(set(labels)) != len(labels):
        raise ParameterError(f"candidate ids must be distinct, got {labels}")
    store = ScoreCache(enabled=cache)

    def evaluate(cand):
        # materialize the candidate's maps first so failures surface here
        try:
            for sc in scenes:
                store.get(sc, cand)
        except (HsadError, ArithmeticError, ValueError) as e:
            logger.warning("candidate %s skipped: %s", cand.label, e)
            return None, str(e)
        est = _make_builder(builder, selected + [cand], seed, store, builder_params)
        try:
            report = cv_harness(scenes, est, folds=folds, repeats=repeats, seed=seed)
        except (HsadError, ArithmeticError, ValueError) as e:
            logger.warning("ensemble with candidate %s failed: %s", cand.label, e)
            return None, str(e)
        return report.mean_auc, None

    selected: List = []
    round_scores: List[float] = []
    log: List[List[dict]] = []
    incumbent = 0.0
    while len(selected) < max_bases:
        pool = [c for c in cands if c.label not in {s.label for s in selected}]
        if not pool:
            break
        if threads and threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(evaluate, pool))
        else:
            results = [evaluate(c) for c in pool]
        entries, best, best_score = [], None, None
        for c, (score, err) in zip(pool, results):
            entry = {"candidate": c.label, "auc": score}
            if err is not None:
                entry["error"] = err
            entries.append(entry)
            if score is not None and (best_score is None or score > best_score):
                best, best_score = c, score
        accepted = best is not None and best_score > incumbent + delta
        for e in entries:
            e["accepted"] = accepted and e["candidate"] == best.label
        log.append(entries)
        if not accepted:
            break
        selected.append(best)
        incumbent = best_score
        round_scores.append(best_score)
        logger.info("round %d: accepted %s (CV AUC %.6f)", len(selected), best.label, best_score)
    return GreedyResult(selected, round_scores, log)

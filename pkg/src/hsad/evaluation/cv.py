"""Scene-level repeated k-fold cross-validation and its report."""
from __future__ import annotations

import copy
import csv
import io
from pathlib import Path
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from sklearn.base import BaseEstimator, clone

from .. import _textio
from .._validation import check_int
from ..cube import Scene
from ..exceptions import ParameterError
from .metrics import ThresholdRule, f1_macro_at, resolve_threshold, roc_auc


@dataclass
class EvalReport:
    """Per-scene, per-dataset and aggregate results of one CV protocol run.

    ``units`` holds one mean AUC per (repeat, fold, dataset) triple; the
    aggregate mean and std (``ddof=1``) are taken over these units.
    """

    per_scene: Dict[str, dict]
    per_dataset: Dict[str, float]
    aggregate: Dict[str, float]
    protocol: Dict[str, object]
    records: List[dict] = field(default_factory=list)
    units: List[dict] = field(default_factory=list)

    @property
    def mean_auc(self) -> float:
        return self.aggregate["auc_mean"]

    def to_dict(self) -> dict:
        return {
            "protocol": dict(self.protocol),
            "aggregate": dict(self.aggregate),
            "per_dataset": {k: {"auc": v} for k, v in self.per_dataset.items()},
            "per_scene": {k: dict(v) for k, v in self.per_scene.items()},
            "units": [dict(u) for u in self.units],
            "records": [dict(r) for r in self.records],
        }

    def to_text(self) -> str:
        return _textio.dumps(self.to_dict(), float_fmt="%.6f")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scene", "dataset", "auc", "f1", "threshold"])
        for name, row in self.per_scene.items():
            w.writerow([name, row["dataset"], f"{row['auc']:.6f}", f"{row['f1_macro']:.6f}",
                        f"{row['threshold']:.6f}"])
        return buf.getvalue()

    def write(self, path_stem) -> tuple:
        """Write ``<stem>.json`` and ``<stem>.csv``; returns both paths."""
        stem = Path(path_stem)
        if stem.suffix in (".json", ".csv"):
            stem = stem.with_suffix("")
        jp, cp = stem.with_suffix(".json"), stem.with_suffix(".csv")
        jp.write_text(self.to_text())
        cp.write_text(self.to_csv())
        return jp, cp


def fold_partition(names: Sequence[str], folds: int, seed: int, repeat: int) -> List[List[int]]:
    """Indices of each fold for one repeat.

    Scenes are ordered by name, shuffled with ``seed ^ repeat`` and cut into
    ``folds`` contiguous groups whose sizes differ by at most one.
    """
    order = sorted(range(len(names)), key=lambda i: (names[i], i))
    rng = np.random.default_rng(int(seed) ^ int(repeat))
    perm = [order[j] for j in rng.permutation(len(order))]
    return [list(map(int, part)) for part in np.array_split(np.asarray(perm, dtype=np.int64), folds)]


def _fit_builder(builder, train: List[Scene]):
    if isinstance(builder, BaseEstimator):
        est = clone(builder)
    elif hasattr(builder, "fit"):
        est = copy.deepcopy(builder)
    else:
        # plain callables score a scene without training
        return builder
    est.fit(train)
    return est.transform


def cv_harness(scenes: Sequence[Scene], builder, folds: int = 2, repeats: int = 5, seed: int = 0,
               threshold: ThresholdRule = "otsu", q: float = 0.02, threads: int = 1) -> EvalReport:
    """Repeated scene-level k-fold evaluation of ``builder``.

    ``builder`` is either an estimator with ``fit(scenes)`` and
    ``transform(scene) -> scores`` (fitted afresh on each training fold) or a
    callable ``scene -> scores`` that needs no training.
    """
    scenes = list(scenes)
    folds = check_int(folds, "folds", low=2)
    repeats = check_int(repeats, "repeats", low=1)
    if len(scenes) < folds:
        raise ParameterError(f"{folds} folds need at least {folds} scenes, got {len(scenes)}")
    for s in scenes:
        if s.truth is None:
            raise ParameterError(f"scene {s.name!r} has no truth mask")
    names = [s.name for s in scenes]

    jobs = []
    for r in range(repeats):
        parts = fold_partition(names, folds, seed, r)
        for f, held in enumerate(parts):
            train = [scenes[i] for p, part in enumerate(parts) if p != f for i in part]
            jobs.append((r, f, held, train))

    def run(job):
        r, f, held, train = job
        score = _fit_builder(builder, train)
        out = []
        for i in sorted(held, key=lambda i: (names[i], i)):
            sc = scenes[i]
            s = np.asarray(score(sc), dtype=np.float64)
            t = resolve_threshold(s, threshold, q)
            out.append({"repeat": r, "fold": f, "scene": sc.name, "dataset": sc.dataset,
                        "auc": roc_auc(s, sc.truth), "f1_macro": f1_macro_at(s, sc.truth, t),
                        "threshold": t})
        return out

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    records = [rec for res in results for rec in res]
    return _summarize(records, folds, repeats, seed, threshold)


def _summarize(records, folds, repeats, seed, threshold) -> EvalReport:
    units = []
    groups: Dict[tuple, List[dict]] = {}
    for rec in records:
        groups.setdefault((rec["repeat"], rec["fold"], rec["dataset"]), []).append(rec)
    for (r, f, d), recs in groups.items():
        units.append({"repeat": r, "fold": f, "dataset": d,
                      "auc": float(np.mean([x["auc"] for x in recs])),
                      "f1_macro": float(np.mean([x["f1_macro"] for x in recs]))})
    units.sort(key=lambda u: (u["repeat"], u["fold"], u["dataset"]))

    def spread(vals):
        vals = np.asarray(vals, dtype=np.float64)
        return float(vals.mean()), float(vals.std(ddof=1)) if vals.size > 1 else 0.0

    auc_mean, auc_std = spread([u["auc"] for u in units])
    f1_mean, f1_std = spread([u["f1_macro"] for u in units])

    per_dataset = {}
    for d in sorted({u["dataset"] for u in units}):
        per_dataset[d] = float(np.mean([u["auc"] for u in units if u["dataset"] == d]))

    per_scene = {}
    for name in sorted({rec["scene"] for rec in records}):
        recs = [x for x in records if x["scene"] == name]
        per_scene[name] = {"dataset": recs[0]["dataset"],
                           "auc": float(np.mean([x["auc"] for x in recs])),
                           "f1_macro": float(np.mean([x["f1_macro"] for x in recs])),
                           "threshold": float(np.mean([x["threshold"] for x in recs]))}
    protocol = {"folds": folds, "repeats": repeats, "seed": int(seed),
                "threshold": threshold if isinstance(threshold, str) else "custom"}
    aggregate = {"auc_mean": auc_mean, "auc_std": auc_std, "f1_mean": f1_mean, "f1_std": f1_std,
                 "units": len(units)}
    return EvalReport(per_scene, per_dataset, aggregate, protocol, records, units)


def evaluate_maps(scenes: Sequence[Scene], maps: Sequence, threshold: ThresholdRule = "otsu",
                  q: float = 0.02) -> EvalReport:
    """Single-pass report for precomputed score maps (no folds)."""
    scenes = list(scenes)
    if len(scenes) != len(maps):
        raise ParameterError(f"{len(scenes)} scenes but {len(maps)} score maps")
    records = []
    for sc, m in zip(scenes, maps):
        s = np.asarray(getattr(m, "scores", m), dtype=np.float64)
        t = resolve_threshold(s, threshold, q)
        records.append({"repeat": 0, "fold": 0, "scene": sc.name, "dataset": sc.dataset,
                        "auc": roc_auc(s, sc.truth), "f1_macro": f1_macro_at(s, sc.truth, t),
                        "threshold": t})
    rep = _summarize(records, 1, 1, 0, threshold)
    rep.protocol = {"folds": 0, "repeats": 1, "seed": 0,
                    "threshold": threshold if isinstance(threshold, str) else "custom"}
    return rep


__all__ = ["EvalReport", "cv_harness", "evaluate_maps", "fold_partition"]

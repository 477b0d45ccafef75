"""``hsad`` command line: detection, fusion, stacking, greedy search, evaluation, synthesis.

Exit codes: 0 success, 2 usage or parameter error, 3 data/format error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Sequence

import numpy as np

from . import _textio
from .cube import HsiCube, Scene, ScoreMap
from .detectors import DETECTOR_IDS, DetectorSpec, canonical_id
from .ensemble import (BUILDERS, MGE_DEFAULT_BASES, UGE_DEFAULT_BASES, ScoreCache, StackModel, average_fuse, greedy_search, mge_fit, uge_fit,
                       vote_fuse)
from .evaluation import cv_harness, evaluate_maps
from .exceptions import HsadError, ParameterError, SingularityError
from .io import load_envi, load_mask, load_scoremap, save_envi, save_mask, save_scoremap
from .synth import SceneSpec, gen_scene

logger = logging.getLogger("hsad")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4

# flag name -> detector constructor parameter
DETECTOR_FLAGS = {
    "center": ("center", str), "ridge": ("ridge", float), "window": ("window", int),
    "guard": ("guard", int), "remove_top_k": ("remove_top_k", int),
    "variance_fraction": ("background_variance_fraction", float),
    "components": ("n_components", int), "clusters": ("n_clusters", int), "fuzziness": ("m", float),
    "pc_count": ("pc_count", int), "area_fraction": ("area_fraction", float), "levels": ("levels", int),
    "smooth_radius": ("smooth_radius", int), "smooth_eps": ("smooth_eps", float),
    "kpca_components": ("kpca_components", int), "landmarks": ("landmark_count", int),
    "trees": ("n_trees", int), "psi": ("subsample_size", int), "lam": ("lam", float),
    "outlier_frac": ("outlier_frac", float),
}


def _read_manifest(path) -> List[Scene]:
    """Rows of ``header mask [dataset]``; ``#`` starts a comment, paths are manifest-relative."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise HsadError(f"{path}: cannot read manifest ({e.strerror})") from e
    scenes = []
    for n, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        cols = [c.strip() for c in cols if c.strip()]
        if len(cols) < 2:
            raise HsadError(f"{path}:{n}: expected 'header mask [dataset]', got {raw!r}")
        hdr, mask = (path.parent / cols[0]), (path.parent / cols[1])
        cube = load_envi(hdr)
        truth = load_mask(mask)
        scenes.append(Scene(cube, truth, dataset=cols[2] if len(cols) > 2 else cube.name, name=cube.name))
    if not scenes:
        raise HsadError(f"{path}: manifest lists no scenes")
    names = [s.name for s in scenes]
    if len(set(names)) != len(names):
        raise HsadError(f"{path}: scene names (header stems) must be unique")
    return scenes


def _ids(text: str) -> List[str]:
    return [canonical_id(t) for t in text.split(",") if t.strip()]


def _threads(n: int) -> int:
    return (os.cpu_count() or 1) if n == 0 else max(1, n)


def _detector_spec(args) -> DetectorSpec:
    params = {}
    for flag, (pname, _) in DETECTOR_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            params[pname] = v
    if args.scales:
        try:
            pairs = [tuple(int(x) for x in p.split(":")) for p in args.scales.split(",")]
        except ValueError:
            raise ParameterError(f"--scales expects inner:outer pairs such as 3:5,5:7, got {args.scales!r}")
        params["scales"] = tuple(pairs)
    for kv in args.param or []:
        key, sep, val = kv.partition("=")
        if not sep:
            raise ParameterError(f"--param expects KEY=VALUE, got {kv!r}")
        try:
            params[key] = json.loads(val)
        except json.JSONDecodeError:
            params[key] = val
    spec = DetectorSpec(args.detector, params, seed=args.seed)
    spec.build()
    return spec


def _write_meta(path: Path, meta: dict) -> None:
    Path(str(path) + ".json").write_text(_textio.dumps(meta, float_fmt="%.17g"))


def _summary(smap: ScoreMap, t0: float) -> None:
    s = smap.scores
    print(f"min={s.min():.6g} max={s.max():.6g} mean={s.mean():.6g} time={time.perf_counter() - t0:.3f}s")


def cmd_detect(args) -> int:
    t0 = time.perf_counter()
    spec = _detector_spec(args)
    cube = load_envi(args.input)
    smap = ScoreMap(spec.build().detect(cube).scores, source=spec.id)
    out = Path(args.output)
    save_scoremap(smap, out, args.format)
    _write_meta(out, {"command": "detect", "input": cube.name, "detector": spec.to_dict(),
                      "seed": int(args.seed), "format": args.format})
    _summary(smap, t0)
    return 0


def cmd_fuse(args) -> int:
    t0 = time.perf_counter()
    maps = [load_scoremap(p) for p in args.maps]
    if args.mode == "vote":
        smap = vote_fuse(maps, args.threshold, args.min_votes, args.q)
    else:
        smap = average_fuse(maps)
    out = Path(args.output)
    save_scoremap(smap, out, args.format)
    _write_meta(out, {"command": "fuse", "mode": args.mode, "inputs": [Path(p).name for p in args.maps],
                      "threshold": args.threshold, "min_votes": args.min_votes, "seed": int(args.seed)})
    _summary(smap, t0)
    return 0


def _builder_params(args) -> dict:
    if args.builder == "uge":
        return {"n_components": args.gmm_k}
    if args.builder == "mge":
        return {"n_trees": args.rf_trees}
    return {}


def cmd_greedy(args) -> int:
    scenes = _read_manifest(args.scenes)
    if args.folds > len(scenes):
        raise ParameterError(f"--folds {args.folds} exceeds the {len(scenes)} scenes in the manifest")
    cands = [DetectorSpec(c, seed=args.seed) for c in _ids(args.candidates)]
    res = greedy_search(cands, scenes, builder=args.builder, folds=args.folds, repeats=args.repeats,
                        max_bases=args.max_bases, delta=args.delta, seed=args.seed,
                        cache=not args.no_cache, threads=_threads(args.threads),
                        builder_params=_builder_params(args))
    doc = {"command": "greedy", "builder": args.builder, "seed": int(args.seed),
           "protocol": {"folds": args.folds, "repeats": args.repeats, "max_bases": args.max_bases,
                        "delta": args.delta},
           "scenes": [{"name": s.name, "dataset": s.dataset} for s in scenes], **res.to_dict()}
    Path(args.out).write_text(_textio.dumps(doc, float_fmt="%.6f"))
    print("selected: " + (",".join(res.selected_ids) or "(none)"))
    for i, sc in enumerate(res.round_scores, start=1):
        print(f"round {i}: {res.selected_ids[i - 1]} cv_auc={sc:.6f}")
    return 0


def cmd_stack_train(args) -> int:
    scenes = _read_manifest(args.scenes)
    bases = _ids(args.bases) if args.bases else None
    cache = ScoreCache()
    if args.kind == "uge":
        model = uge_fit(scenes, bases or UGE_DEFAULT_BASES, gmm_k=args.gmm_k,
                        seed=args.seed, n_pcs=args.pcs, cache=cache)
    else:
        model = mge_fit(scenes, bases or MGE_DEFAULT_BASES, seed=args.seed,
                        n_channels=args.channels, trees=args.rf_trees, cache=cache)
    model.save(args.out)
    print(f"{model.meta_kind} stack over {','.join(s.label for s in model.base_specs)} "
          f"trained on {len(scenes)} scene(s) -> {args.out}")
    return 0


def cmd_stack_apply(args) -> int:
    t0 = time.perf_counter()
    model = StackModel.load(args.model)
    cube = load_envi(args.input)
    smap = model.apply(cube)
    out = Path(args.output)
    save_scoremap(smap, out, args.format)
    _write_meta(out, {"command": "stack-apply", "input": cube.name, "model": Path(args.model).name,
                      "meta_kind": model.meta_kind, "seed": int(model.seed)})
    _summary(smap, t0)
    return 0


def cmd_evaluate(args) -> int:
    scenes = _read_manifest(args.scenes)
    if args.maps:
        if len(args.maps) != len(scenes):
            raise ParameterError(f"{len(args.maps)} score maps for {len(scenes)} manifest rows")
        report = evaluate_maps(scenes, [load_scoremap(p) for p in args.maps], args.threshold, args.q)
    else:
        if args.folds > len(scenes):
            raise ParameterError(f"--folds {args.folds} exceeds the {len(scenes)} scenes in the manifest")
        cache = ScoreCache()
        if args.detector:
            spec = DetectorSpec(args.detector, seed=args.seed)

            def builder(scene):
                return cache.get(scene, spec)
        else:
            bases = tuple(_ids(args.bases)) if args.bases else None
            cls = BUILDERS[args.builder]
            kw = _builder_params(args)
            if bases:
                kw["base_specs"] = bases
            builder = cls(random_state=args.seed, cache=cache, **kw)
        report = cv_harness(scenes, builder, folds=args.folds, repeats=args.repeats, seed=args.seed,
                            threshold=args.threshold, q=args.q, threads=_threads(args.threads))
    jp, cp = report.write(args.out)
    agg = report.aggregate
    print(f"auc={agg['auc_mean']:.6f}+-{agg['auc_std']:.6f} f1={agg['f1_mean']:.6f} -> {jp}, {cp}")
    return 0


def cmd_synth(args) -> int:
    spec = SceneSpec(width=args.width, height=args.height, bands=args.bands, endmembers=args.endmembers,
                     noise_sigma=args.noise, anomaly_count=args.anomalies, anomaly_size=args.size,
                     anomaly_contrast=args.contrast, layout=args.layout, seed=args.seed,
                     abundance_scale=args.abundance_scale)
    cube, mask = gen_scene(spec)
    stem = Path(args.out)
    if stem.suffix == ".hdr":
        stem = stem.with_suffix("")
    hdr = stem.with_name(stem.name + ".hdr")
    mhdr = stem.with_name(stem.name + "_mask.hdr")
    save_envi(HsiCube(cube.data, wavelengths=cube.wavelengths, name=stem.name), hdr)
    save_mask(mask, mhdr)
    print(f"{cube.width}x{cube.height}x{cube.bands} scene, {mask.n_anomalous} anomalous pixels -> {hdr}, {mhdr}")
    return 0


def _positive_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _global_flags(parser, defaults: bool) -> None:
    # subcommands accept the globals too; SUPPRESS keeps them from clobbering earlier values
    dflt = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--seed", type=_positive_int, default=dflt(42),
                        help="seed for every stochastic step (default 42)")
    parser.add_argument("--threads", type=_positive_int, default=dflt(1),
                        help="worker threads, 0 = one per CPU (default 1)")
    parser.add_argument("--log-level", default=dflt("WARNING"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="logging verbosity")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, defaults=False)

    p = argparse.ArgumentParser(prog="hsad", description="Hyperspectral anomaly detection toolkit")
    _global_flags(p, defaults=True)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", parents=[common], help="run one base detector on a cube")
    d.add_argument("--input", required=True, help="ENVI header of the cube")
    d.add_argument("--detector", required=True, help="detector id: " + ", ".join(DETECTOR_IDS))
    d.add_argument("--output", required=True)
    d.add_argument("--format", default="flat-f64", choices=["flat-f64", "pgm16"])
    for flag, (_, typ) in DETECTOR_FLAGS.items():
        d.add_argument("--" + flag.replace("_", "-"), dest=flag, type=typ, default=None)
    d.add_argument("--scales", default=None, help="LSUNRSORAD ring scales, e.g. 3:5,5:7,7:9")
    d.add_argument("--param", action="append", metavar="KEY=VALUE", help="any detector parameter")
    d.set_defaults(func=cmd_detect)

    f = sub.add_parser("fuse", parents=[common], help="vote or average several score maps")
    f.add_argument("--maps", nargs="+", required=True)
    f.add_argument("--mode", choices=["vote", "average"], default="vote")
    f.add_argument("--threshold", choices=["otsu", "percentile"], default="otsu")
    f.add_argument("--q", type=float, default=0.02, help="upper fraction for the percentile rule")
    f.add_argument("--min-votes", type=int, default=2)
    f.add_argument("--output", required=True)
    f.add_argument("--format", default="flat-f64", choices=["flat-f64", "pgm16"])
    f.set_defaults(func=cmd_fuse)

    def ensemble_flags(sp):
        sp.add_argument("--gmm-k", type=int, default=2, help="GMM meta-model components")
        sp.add_argument("--rf-trees", type=int, default=200, help="random-forest meta-model trees")

    g = sub.add_parser("greedy", parents=[common], help="greedy base-detector search")
    g.add_argument("--scenes", required=True, help="manifest: header mask dataset per line")
    g.add_argument("--candidates", default=",".join(DETECTOR_IDS))
    g.add_argument("--builder", choices=sorted(BUILDERS), default="uge")
    g.add_argument("--folds", type=int, default=2)
    g.add_argument("--repeats", type=int, default=5)
    g.add_argument("--max-bases", type=int, default=4)
    g.add_argument("--delta", type=float, default=1e-4)
    g.add_argument("--no-cache", action="store_true", help="recompute base maps every round")
    g.add_argument("--out", required=True, help="result document path")
    ensemble_flags(g)
    g.set_defaults(func=cmd_greedy)

    t = sub.add_parser("stack-train", parents=[common], help="fit a stacking ensemble")
    t.add_argument("--scenes", required=True)
    t.add_argument("--kind", choices=["uge", "mge"], default="uge")
    t.add_argument("--bases", default=None, help="comma-separated base detector ids")
    t.add_argument("--pcs", type=int, default=10, help="PCA passthrough components (uge)")
    t.add_argument("--channels", type=int, default=30, help="random passthrough channels (mge)")
    t.add_argument("--out", required=True)
    ensemble_flags(t)
    t.set_defaults(func=cmd_stack_train)

    a = sub.add_parser("stack-apply", parents=[common], help="score a cube with a trained ensemble")
    a.add_argument("--model", required=True)
    a.add_argument("--input", required=True)
    a.add_argument("--output", required=True)
    a.add_argument("--format", default="flat-f64", choices=["flat-f64", "pgm16"])
    a.set_defaults(func=cmd_stack_apply)

    e = sub.add_parser("evaluate", parents=[common], help="ROC-AUC / F1-macro report")
    e.add_argument("--scenes", required=True)
    src = e.add_mutually_exclusive_group()
    src.add_argument("--maps", nargs="+", help="precomputed score maps, one per manifest row")
    src.add_argument("--detector", help="cross-validate a single base detector")
    e.add_argument("--builder", choices=sorted(BUILDERS), default="uge")
    e.add_argument("--bases", default=None)
    e.add_argument("--folds", type=int, default=2)
    e.add_argument("--repeats", type=int, default=5)
    e.add_argument("--threshold", choices=["otsu", "percentile"], default="otsu")
    e.add_argument("--q", type=float, default=0.02)
    e.add_argument("--out", required=True, help="report stem; writes .json and .csv")
    ensemble_flags(e)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic cube and mask")
    s.add_argument("--width", type=int, default=64)
    s.add_argument("--height", type=int, default=64)
    s.add_argument("--bands", type=int, default=30)
    s.add_argument("--endmembers", type=int, default=3)
    s.add_argument("--noise", type=float, default=0.01)
    s.add_argument("--anomalies", type=int, default=8)
    s.add_argument("--size", type=int, default=1)
    s.add_argument("--contrast", type=float, default=0.5)
    s.add_argument("--layout", choices=["uniform", "split"], default="uniform")
    s.add_argument("--abundance-scale", type=int, default=25)
    s.add_argument("--out", required=True, help="output stem; writes <stem>.hdr and <stem>_mask.hdr")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParameterError as e:
        print(f"hsad {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularityError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"hsad {args.command}: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HsadError, OSError) as e:
        print(f"hsad {args.command}: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

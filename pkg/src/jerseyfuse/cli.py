"""Command-line front end: ingestion, filtering, calibration, consolidation,
evaluation, grid search, ablations and the synthetic generator.

Exit codes: 0 success, 1 validation failure, 2 I/O failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .calibration import (CalibrationError, calibration_frames_from_tracklets,
                          fit_temperature)
from .consolidate import HeuristicConfig, PriorMode
from .evaluation import (EvaluationError, GridSpec, digit_confusion,
                         evaluate_accuracy, format_ablation_table,
                         grid_search_filter, run_ablation)
from .geometry import BallReference, GeometryError, detect_ball_tracklet, torso_crop
from .interchange import (InterchangeError, attach_embeddings,
                          attach_ground_truth, parse_frame_records,
                          read_embeddings, read_ground_truth, validate_record,
                          write_embeddings, write_frame_records,
                          write_ground_truth)
from .pipeline import PipelineConfig, label_tracklet, run
from .subject_filter import FilterConfig, ScoreMode, filter_outliers
from .synthgen import SynthConfig, generate_corpus, sidecar_matrix

USAGE_EXIT = 64
IO_EXIT = 2
VALIDATION_EXIT = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_tracklets(frames_path, embeddings_path=None, gt_path=None):
    with open(frames_path, "rb") as fp:
        tracklets = parse_frame_records(fp)
    if embeddings_path:
        with open(embeddings_path, "rb") as fp:
            attach_embeddings(tracklets, read_embeddings(fp))
    gt = None
    if gt_path:
        with open(gt_path) as fp:
            gt = read_ground_truth(fp)
        attach_ground_truth(tracklets, gt)
    return tracklets, gt


def _write_json(obj, path):
    if path == "-":
        json.dump(obj, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        with open(path, "w") as fp:
            json.dump(obj, fp, indent=2, sort_keys=True)
            fp.write("\n")


def _ball_ref(arg, rel_tol) -> BallReference:
    w, h = (float(v) for v in arg.split(","))
    return BallReference(mean_w=w, mean_h=h, rel_tolerance=rel_tol)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        method=args.method,
        use_filter=args.filter == "on",
        filter_cfg=FilterConfig(K=args.K, N=args.N, mode=ScoreMode(args.mode)),
        legibility_threshold=args.legibility_threshold,
        heuristic=HeuristicConfig(
            illegible_threshold=args.tau,
            one_digit_weight=args.one_digit_weight,
            use_bias=not args.no_bias,
            use_threshold=not args.no_threshold),
        p_single=args.p_single,
        use_prior_bias=not args.no_bias,
        prior_mode=PriorMode(args.prior_mode),
        temperature=args.temperature,
        ball_ref=(None if args.ball_ref is None
                  else _ball_ref(args.ball_ref, args.ball_rel_tol)),
    )


def _add_consolidation_flags(p):
    p.add_argument("--method", choices=("heuristic", "probabilistic"),
                   default="heuristic")
    p.add_argument("--prior-mode", choices=[m.value for m in PriorMode],
                   default=PriorMode.PER_FRAME.value)
    p.add_argument("--p-single", type=float, default=0.39)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=0.35,
                   help="illegibility threshold on summed confidence")
    p.add_argument("--one-digit-weight", type=float, default=0.5)
    p.add_argument("--legibility-threshold", type=float, default=0.5)
    p.add_argument("--no-bias", action="store_true")
    p.add_argument("--no-threshold", action="store_true")
    p.add_argument("--filter", choices=("on", "off"), default="on")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--N", type=float, default=3.5)
    p.add_argument("--mode", choices=[m.value for m in ScoreMode],
                   default=ScoreMode.RADIAL_ZSCORE.value)
    p.add_argument("--ball-ref", metavar="W,H", default=None)
    p.add_argument("--ball-rel-tol", type=float, default=0.2)


def build_parser() -> _Parser:
    parser = _Parser(prog="jerseyfuse")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--show-config", action="store_true",
                        help="print default configuration and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    for name, typ, dflt in [("n-tracklets", int, 100), ("frames", int, 50),
                            ("p-single", float, 0.39), ("legible-frac", float, 1.0),
                            ("eps-trunc", float, 0.0), ("eps-distract", float, 0.0),
                            ("sharpness", float, 6.0), ("embed-dim", int, 8),
                            ("cluster-sep", float, 10.0), ("noise-sigma", float, 0.1),
                            ("n-ball", int, 0), ("seed", int, 0)]:
        p.add_argument(f"--{name}", type=typ, default=dflt)
    p.add_argument("--out-prefix", required=True,
                   help="writes PREFIX.jsonl, PREFIX.jnre, PREFIX.gt.json, "
                        "PREFIX.provenance.json")

    p = sub.add_parser("validate", help="check frame records against the schema")
    p.add_argument("--frames", required=True)

    p = sub.add_parser("filter", help="main-subject outlier filtering")
    p.add_argument("--frames", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--N", type=float, default=3.5)
    p.add_argument("--mode", choices=[m.value for m in ScoreMode],
                   default=ScoreMode.RADIAL_ZSCORE.value)
    p.add_argument("--out", default="-")

    p = sub.add_parser("calibrate", help="fit the temperature on labeled data")
    p.add_argument("--frames", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--legibility-threshold", type=float, default=0.5)
    p.add_argument("--holdout", type=float, default=0.0,
                   help="fit on a held-out fraction of tracklets (0 = all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")

    p = sub.add_parser("consolidate", help="label every tracklet")
    p.add_argument("--frames", required=True)
    p.add_argument("--embeddings", default=None)
    _add_consolidation_flags(p)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.add_argument("--manifest", default=None)
    p.add_argument("--emit-intermediate", default=None,
                   help="directory for per-stage dumps")

    p = sub.add_parser("evaluate", help="tracklet accuracy against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--frames", default=None,
                   help="when given, also report the digit-count confusion")
    p.add_argument("--out", default="-")

    p = sub.add_parser("gridsearch", help="select filter (K, N) by holdout")
    p.add_argument("--frames", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--k-grid", default="1,2,3,4,5")
    p.add_argument("--n-grid", default="2.0,2.5,3.0,3.5,4.0,4.5,5.0")
    p.add_argument("--holdout", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    _add_consolidation_flags(p)
    p.add_argument("--out", default="-")

    p = sub.add_parser("ablate", help="ablation table over method variants")
    p.add_argument("--frames", required=True)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--gt", required=True)
    _add_consolidation_flags(p)
    p.add_argument("--out", default="-")

    p = sub.add_parser("crop", help="torso crop boxes from keypoints")
    p.add_argument("--frames", required=True)
    p.add_argument("--image-size", metavar="W,H", required=True)
    p.add_argument("--pad", type=int, default=5)
    p.add_argument("--out", default="-")

    p = sub.add_parser("ball-filter", help="flag ball-sized tracklets")
    p.add_argument("--frames", required=True)
    p.add_argument("--ball-ref", metavar="W,H", required=True)
    p.add_argument("--ball-rel-tol", type=float, default=0.2)
    p.add_argument("--out", default="-")

    return parser


def _cmd_synth(args):
    cfg = SynthConfig(
        n_tracklets=args.n_tracklets, frames_per_tracklet=args.frames,
        p_single=args.p_single, legible_frac=args.legible_frac,
        eps_trunc=args.eps_trunc, eps_distract=args.eps_distract,
        sharpness=args.sharpness, embed_dim=args.embed_dim,
        cluster_sep=args.cluster_sep, noise_sigma=args.noise_sigma,
        n_ball_tracklets=args.n_ball, seed=args.seed)
    tracklets, gt, provenance = generate_corpus(cfg)
    with open(args.out_prefix + ".jsonl", "w") as fp:
        write_frame_records(tracklets, fp)
    with open(args.out_prefix + ".jnre", "wb") as fp:
        write_embeddings(sidecar_matrix(tracklets), fp)
    with open(args.out_prefix + ".gt.json", "w") as fp:
        write_ground_truth(gt, fp)
    _write_json(provenance, args.out_prefix + ".provenance.json")
    return 0


def _cmd_validate(args):
    with open(args.frames, "rb") as fp:
        try:
            tracklets = parse_frame_records(fp)
        except InterchangeError as e:
            print(f"invalid: {e}", file=sys.stderr)
            return VALIDATION_EXIT
    n = 0
    for t in tracklets:
        for rec in t.frames:
            for v in validate_record(rec):
                print(f"{t.tracklet_id}/{rec.frame_idx}: {v}", file=sys.stderr)
                n += 1
    if n:
        print(f"{n} violations", file=sys.stderr)
        return VALIDATION_EXIT
    print("ok")
    return 0


def _cmd_filter(args):
    tracklets, _ = _load_tracklets(args.frames, args.embeddings)
    cfg = FilterConfig(K=args.K, N=args.N, mode=ScoreMode(args.mode))
    out = {}
    for t in tracklets:
        if t.embeddings is None or not len(t.embeddings):
            out[t.tracklet_id] = list(range(len(t.frames)))
        else:
            out[t.tracklet_id] = filter_outliers(t.embeddings, cfg)
    _write_json(out, args.out)
    return 0


def _cmd_calibrate(args):
    tracklets, gt = _load_tracklets(args.frames, gt_path=args.gt)
    if args.holdout > 0:
        from .evaluation import split_holdout
        _, tracklets = split_holdout(tracklets, args.holdout, args.seed)
    frames = calibration_frames_from_tracklets(tracklets, gt,
                                               args.legibility_threshold)
    model = fit_temperature(frames)
    _write_json({"temperature": model.T}, args.out)
    return 0


def _cmd_consolidate(args):
    t0 = time.time()
    tracklets, _ = _load_tracklets(args.frames, args.embeddings)
    cfg = _pipeline_config(args)
    if args.emit_intermediate:
        import os
        os.makedirs(args.emit_intermediate, exist_ok=True)
        kept = {}
        for t in tracklets:
            if cfg.use_filter and t.embeddings is not None and len(t.embeddings):
                kept[t.tracklet_id] = filter_outliers(t.embeddings, cfg.filter_cfg)
        _write_json(kept, os.path.join(args.emit_intermediate, "kept.json"))
    labels = run(tracklets, cfg, jobs=args.jobs)
    _write_json({tid: lab.value for tid, lab in labels.items()}, args.out)
    if args.manifest:
        manifest = {
            "tool_version": __version__,
            "seed": args.seed,
            "config": _config_snapshot(cfg),
            "inputs": {p: _sha256(p) for p in (args.frames, args.embeddings) if p},
            "elapsed_seconds": round(time.time() - t0, 3),
        }
        _write_json(manifest, args.manifest)
    return 0


def _config_snapshot(cfg: PipelineConfig) -> dict:
    def enc(v):
        if dataclasses.is_dataclass(v):
            return {f.name: enc(getattr(v, f.name)) for f in dataclasses.fields(v)}
        if hasattr(v, "value") and not isinstance(v, (int, float, str)):
            return v.value
        return v
    return enc(cfg)


def _cmd_evaluate(args):
    with open(args.pred) as fp:
        pred = json.load(fp)
    with open(args.gt) as fp:
        gt = read_ground_truth(fp)
    report = evaluate_accuracy({k: int(v) for k, v in pred.items()}, gt)
    out = {
        "accuracy": report.accuracy,
        "n_total": report.n_total,
        "n_correct": report.n_correct,
        "missing": report.missing,
        "per_class": {str(k): list(v) for k, v in sorted(report.per_class.items())},
    }
    if args.frames:
        tracklets, _ = _load_tracklets(args.frames, gt_path=args.gt)
        out["digit_confusion"] = digit_confusion(tracklets, gt).tolist()
    print(str(report), file=sys.stderr)
    _write_json(out, args.out)
    return 0


def _cmd_gridsearch(args):
    tracklets, gt = _load_tracklets(args.frames, args.embeddings, args.gt)
    spec = GridSpec(
        k_values=tuple(int(v) for v in args.k_grid.split(",")),
        n_values=tuple(float(v) for v in args.n_grid.split(",")),
        holdout_fraction=args.holdout, seed=args.seed)
    k, n, acc = grid_search_filter(tracklets, gt, spec, _pipeline_config(args))
    _write_json({"K": k, "N": n, "holdout_accuracy": acc}, args.out)
    return 0


def _cmd_ablate(args):
    tracklets, gt = _load_tracklets(args.frames, args.embeddings, args.gt)
    rows = run_ablation(tracklets, gt, _pipeline_config(args))
    print(format_ablation_table(rows), file=sys.stderr)
    _write_json([{"variant": v, "accuracy": a, "delta": d} for v, a, d in rows],
                args.out)
    return 0


def _cmd_crop(args):
    tracklets, _ = _load_tracklets(args.frames)
    W, H = (int(v) for v in args.image_size.split(","))
    out = {}
    for t in tracklets:
        boxes = {}
        for rec in t.frames:
            if rec.keypoints is None:
                continue
            boxes[str(rec.frame_idx)] = list(
                torso_crop(rec.keypoints, (W, H), args.pad).as_tuple())
        out[t.tracklet_id] = boxes
    _write_json(out, args.out)
    return 0


def _cmd_ball_filter(args):
    tracklets, _ = _load_tracklets(args.frames)
    ref = _ball_ref(args.ball_ref, args.ball_rel_tol)
    out = {}
    for t in tracklets:
        bboxes = [(rec.bbox[2], rec.bbox[3]) for rec in t.frames]
        out[t.tracklet_id] = detect_ball_tracklet(bboxes, ref)
    _write_json(out, args.out)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "validate": _cmd_validate,
    "filter": _cmd_filter,
    "calibrate": _cmd_calibrate,
    "consolidate": _cmd_consolidate,
    "evaluate": _cmd_evaluate,
    "gridsearch": _cmd_gridsearch,
    "ablate": _cmd_ablate,
    "crop": _cmd_crop,
    "ball-filter": _cmd_ball_filter,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.show_config:
        _write_json(_config_snapshot(PipelineConfig()), "-")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as e:
        print(f"error: no such file: {e.filename}", file=sys.stderr)
        return IO_EXIT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return IO_EXIT
    except (InterchangeError, CalibrationError, EvaluationError,
            GeometryError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return VALIDATION_EXIT


if __name__ == "__main__":
    sys.exit(main())

"""Evaluation protocol, digit-count confusion, grid search and ablations.

Accuracy is tracklet-level exact match with illegible (-1) treated as an
ordinary class, matching the SoccerNet annotation convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .consolidate import HeuristicConfig
from .interchange import TrackletLabel
from .pipeline import PipelineConfig, run
from .subject_filter import FilterConfig

DEFAULT_K_GRID = (1, 2, 3, 4, 5)
DEFAULT_N_GRID = (2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0)


class EvaluationError(ValueError):
    pass


@dataclass
class EvalReport:
    accuracy: float
    n_total: int
    n_correct: int
    per_class: dict  # label value -> (correct, total)
    missing: list    # gt ids with no prediction

    def __str__(self):
        return (f"accuracy {self.accuracy:.4f} "
                f"({self.n_correct}/{self.n_total}, {len(self.missing)} missing)")


@dataclass(frozen=True)
class GridSpec:
    k_values: tuple = DEFAULT_K_GRID
    n_values: tuple = DEFAULT_N_GRID
    holdout_fraction: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not self.k_values or not self.n_values:
            raise EvaluationError("empty parameter grid")
        if not (0.0 < self.holdout_fraction < 1.0):
            raise EvaluationError("holdout_fraction must be in (0, 1)")


def _value(label) -> int:
    return label.value if isinstance(label, TrackletLabel) else int(label)


def evaluate_accuracy(predictions: dict, gt: dict) -> EvalReport:
    """Exact-match accuracy over every ground-truth tracklet; missing
    predictions count as wrong."""
    if not gt:
        raise EvaluationError("empty ground truth")
    n_correct = 0
    per_class: dict = {}
    missing = []
    for tid in sorted(gt):
        truth = _value(gt[tid])
        correct, total = per_class.get(truth, (0, 0))
        if tid not in predictions:
            missing.append(tid)
            per_class[truth] = (correct, total + 1)
            continue
        hit = _value(predictions[tid]) == truth
        n_correct += hit
        per_class[truth] = (correct + hit, total + 1)
    n_total = len(gt)
    return EvalReport(accuracy=n_correct / n_total, n_total=n_total,
                      n_correct=n_correct, per_class=per_class, missing=missing)


def digit_confusion(tracklets, gt: dict) -> np.ndarray:
    """2x2 matrix of fractions: rows = prediction digit count (2, 1),
    cols = truth digit count (2, 1), over per-frame decodes in tracklets
    with a legible ground-truth label."""
    counts = np.zeros((2, 2))
    for t in tracklets:
        label = gt.get(t.tracklet_id, t.gt_label)
        if label is None or _value(label) < 0:
            continue
        truth_col = 0 if _value(label) >= 10 else 1
        for rec in t.frames:
            if len(rec.predicted) not in (1, 2):
                continue
            pred_row = 0 if len(rec.predicted) == 2 else 1
            counts[pred_row, truth_col] += 1
    total = counts.sum()
    if total == 0:
        raise EvaluationError("no qualifying frames for digit confusion")
    return counts / total


def split_holdout(tracklets, fraction: float, seed: int):
    """Deterministic shuffle split into (tune, holdout) tracklet lists."""
    order = np.random.default_rng(seed).permutation(len(tracklets))
    n_hold = int(round(fraction * len(tracklets)))
    if n_hold == 0 or n_hold == len(tracklets):
        raise EvaluationError("degenerate holdout split")
    hold_idx = set(order[:n_hold].tolist())
    tune = [t for i, t in enumerate(tracklets) if i not in hold_idx]
    hold = [t for i, t in enumerate(tracklets) if i in hold_idx]
    return tune, hold


def grid_search_filter(tracklets, gt: dict, spec: GridSpec = GridSpec(),
                       base_cfg: PipelineConfig = PipelineConfig()):
    """Select (K, N) for the subject filter by tune-split accuracy.

    Returns (K, N, holdout_accuracy). Ties break toward smaller K, then
    smaller N.
    """
    if len(tracklets) < 10:
        raise EvaluationError("need at least 10 tracklets with ground truth")
    tune, hold = split_holdout(tracklets, spec.holdout_fraction, spec.seed)
    tune_gt = {t.tracklet_id: gt[t.tracklet_id] for t in tune}
    hold_gt = {t.tracklet_id: gt[t.tracklet_id] for t in hold}

    best = None
    for k in sorted(spec.k_values):
        for n in sorted(spec.n_values):
            cfg = replace(base_cfg, use_filter=True,
                          filter_cfg=FilterConfig(K=k, N=n,
                                                  mode=base_cfg.filter_cfg.mode))
            acc = evaluate_accuracy(run(tune, cfg), tune_gt).accuracy
            if best is None or acc > best[0]:
                best = (acc, k, n)
    _, k, n = best
    cfg = replace(base_cfg, use_filter=True,
                  filter_cfg=FilterConfig(K=k, N=n, mode=base_cfg.filter_cfg.mode))
    hold_acc = evaluate_accuracy(run(hold, cfg), hold_gt).accuracy
    return k, n, hold_acc


ABLATION_VARIANTS = (
    "heuristic full",
    "heuristic no-bias",
    "heuristic no-bias no-threshold",
    "heuristic no-filtering",
    "probabilistic full",
    "probabilistic no-bias",
)


def _variant_cfg(base: PipelineConfig, name: str) -> PipelineConfig:
    if name == "heuristic full":
        return replace(base, method="heuristic")
    if name == "heuristic no-bias":
        return replace(base, method="heuristic",
                       heuristic=replace(base.heuristic, use_bias=False))
    if name == "heuristic no-bias no-threshold":
        return replace(base, method="heuristic",
                       heuristic=replace(base.heuristic, use_bias=False,
                                         use_threshold=False))
    if name == "heuristic no-filtering":
        return replace(base, method="heuristic", use_filter=False)
    if name == "probabilistic full":
        return replace(base, method="probabilistic", use_prior_bias=True)
    if name == "probabilistic no-bias":
        return replace(base, method="probabilistic", use_prior_bias=False)
    raise EvaluationError(f"unknown ablation variant: {name}")


def run_ablation(tracklets, gt: dict, base_cfg: PipelineConfig = PipelineConfig()):
    """Accuracy per ablation variant, with deltas versus 'heuristic full'.

    Returns a list of (variant, accuracy, delta) tuples.
    """
    rows = []
    accs = {}
    for name in ABLATION_VARIANTS:
        cfg = _variant_cfg(base_cfg, name)
        accs[name] = evaluate_accuracy(run(tracklets, cfg), gt).accuracy
    ref = accs["heuristic full"]
    for name in ABLATION_VARIANTS:
        rows.append((name, accs[name], accs[name] - ref))
    return rows


def format_ablation_table(rows) -> str:
    width = max(len(r[0]) for r in rows)
    lines = [f"{'variant':<{width}}  accuracy   delta"]
    for name, acc, delta in rows:
        lines.append(f"{name:<{width}}  {acc:8.4f}  {delta:+.4f}")
    return "\n".join(lines)

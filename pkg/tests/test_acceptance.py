"""Acceptance suite: one test per release criterion, each printing a
pass/fail line. Run with `pytest tests/test_acceptance.py -s` to see them.
"""

import math
import time

import numpy as np
import pytest

from jerseyfuse.calibration import CalibrationModel, fit_temperature, nll
from jerseyfuse.consolidate import (HeuristicConfig, Prior, PriorMode,
                                    consolidate_heuristic,
                                    consolidate_probabilistic, gate_legible)
from jerseyfuse.evaluation import (GridSpec, digit_confusion,
                                   evaluate_accuracy, grid_search_filter,
                                   run_ablation)
from jerseyfuse.geometry import torso_crop
from jerseyfuse.interchange import EOS, NUM_CHARS, TrackletLabel
from jerseyfuse.pipeline import PipelineConfig, run
from jerseyfuse.subject_filter import FilterConfig
from jerseyfuse.synthgen import (SynthConfig, generate_calibration_frames,
                                 generate_corpus, generate_planted_grid_corpus)

T1 = CalibrationModel(1.0)


def report(name, ok):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {name}")
    assert ok, name


def mixed_corpora(n_total=1000):
    """Varied seeded corpora totalling n_total tracklets."""
    settings = [
        dict(eps_trunc=0.0, eps_distract=0.0, legible_frac=1.0, sharpness=2.0),
        dict(eps_trunc=0.3, eps_distract=0.0, legible_frac=0.8, sharpness=1.0),
        dict(eps_trunc=0.1, eps_distract=0.2, legible_frac=0.6, sharpness=0.7),
        dict(eps_trunc=0.4, eps_distract=0.1, legible_frac=0.4, sharpness=4.0),
    ]
    per = n_total // len(settings)
    tracklets = []
    for i, kw in enumerate(settings):
        cfg = SynthConfig(n_tracklets=per, frames_per_tracklet=8, seed=100 + i,
                          **kw)
        part, _, _ = generate_corpus(cfg)
        for t in part:
            t.tracklet_id = f"c{i}_{t.tracklet_id}"
        tracklets.extend(part)
    return tracklets


def oracle_probabilistic(frames, prior, T, mode):
    """Brute force: score all 10 one-digit and 90 two-digit labels directly."""
    if not frames:
        return TrackletLabel.illegible()
    log_prior = np.stack([np.log(np.where(prior.pos1 > 0, prior.pos1, 1e-300)),
                          np.log(np.where(prior.pos2 > 0, prior.pos2, 1e-300))])
    log_prior[0][prior.pos1 == 0] = -np.inf
    log_prior[1][prior.pos2 == 0] = -np.inf

    def pos_score(j, k):
        total = 0.0
        for f in frames:
            p = np.maximum(f.char_dists[j], 1e-12) ** (1.0 / T)
            p = p / p.sum()
            total += math.log(max(p[k], 1e-300)) if p[k] > 0 else -math.inf
            if mode is PriorMode.PER_FRAME:
                total += log_prior[j][k]
        if mode is PriorMode.ONCE:
            total += log_prior[j][k]
        return total

    # candidates ordered so ties resolve like the per-position rule:
    # smaller first digit, then second-position digits before EOS
    candidates = []
    for d1 in range(10):
        for d2 in range(10):
            candidates.append((10 * d1 + d2, pos_score(0, d1) + pos_score(1, d2)))
        candidates.append((d1, pos_score(0, d1) + pos_score(1, EOS)))
    order = {}
    for d1 in range(10):
        for d2 in range(10):
            order[10 * d1 + d2] = (d1, d2)
        order[d1] = (d1, 10)
    # mathematically tied labels can differ in the last float bit between
    # computation orders; resolve ties within 1e-9 by the canonical order
    best_score = max(s for _, s in candidates)
    tied = [lab for lab, s in candidates if s >= best_score - 1e-9]
    return TrackletLabel(min(tied, key=order.get))


def oracle_heuristic(frames, cfg):
    """Naive restatement of the weighted-vote rule."""
    if not frames:
        return TrackletLabel.illegible()
    if cfg.use_threshold and sum(f.confidence for f in frames) < cfg.illegible_threshold:
        return TrackletLabel.illegible()
    voted = [f for f in frames if f.predicted != ""]
    if not voted:
        return TrackletLabel.illegible()
    has_one = any(len(f.predicted) == 1 for f in voted)
    has_two = any(len(f.predicted) == 2 for f in voted)
    totals = {}
    for f in voted:
        w = f.confidence
        if cfg.use_bias and has_one and has_two and len(f.predicted) == 1:
            w *= cfg.one_digit_weight
        totals[f.predicted] = totals.get(f.predicted, 0.0) + w
    best_weight = max(totals.values())
    winners = sorted(int(s) for s, w in totals.items() if w == best_weight)
    return TrackletLabel(winners[0])


class TestProbabilisticOracle:
    def test_eq1_oracle_equivalence(self):
        tracklets = mixed_corpora(1000)
        start = time.time()
        mismatches = 0
        for mode in PriorMode:
            for t in tracklets:
                frames = [t.frames[i] for i in gate_legible(t)]
                got = consolidate_probabilistic(frames, Prior.biased(), T1, mode)
                want = oracle_probabilistic(frames, Prior.biased(), 1.0, mode)
                mismatches += got != want
        elapsed = time.time() - start
        report("log-likelihood consolidation oracle equivalence (both prior modes, T=1, 1000 tracklets)",
               mismatches == 0)
        report(f"log-likelihood consolidation oracle runtime < 10 s (took {elapsed:.2f} s)", elapsed < 10)


class TestHeuristicOracle:
    def test_heuristic_oracle_equivalence(self):
        tracklets = mixed_corpora(1000)
        cfg = HeuristicConfig()
        mismatches = 0
        for t in tracklets:
            frames = [t.frames[i] for i in gate_legible(t)]
            mismatches += consolidate_heuristic(frames, cfg) != \
                oracle_heuristic(frames, cfg)
        report("heuristic oracle equivalence (1000 tracklets)", mismatches == 0)


class TestFilteringAblation:
    def test_filtering_gain_at_least_two_points(self):
        cfg = SynthConfig(n_tracklets=500, frames_per_tracklet=20,
                          eps_distract=0.2, cluster_sep=1.0, noise_sigma=0.1,
                          sharpness=1.0, distractor_sharpness=8.0, seed=42)
        tracklets, gt, _ = generate_corpus(cfg)
        # a coherent 20% outlier mass caps the radial z-score near 2, so the
        # removal threshold sits below the default 3.5 for this corpus
        filtered = PipelineConfig(filter_cfg=FilterConfig(K=3, N=1.4))
        unfiltered = PipelineConfig(use_filter=False)
        acc_on = evaluate_accuracy(run(tracklets, filtered), gt).accuracy
        acc_off = evaluate_accuracy(run(tracklets, unfiltered), gt).accuracy
        report(f"filtering ablation: {acc_on:.3f} (on) vs {acc_off:.3f} (off), "
               "gain >= 2 points", acc_on - acc_off >= 0.02)


class TestDigitBiasAblation:
    def test_bias_strictly_helps_on_truncation(self):
        cfg = SynthConfig(n_tracklets=500, frames_per_tracklet=5,
                          eps_trunc=0.3, seed=7)
        tracklets, gt, _ = generate_corpus(cfg)
        rows = {name: acc for name, acc, _ in run_ablation(tracklets, gt)}
        report(f"digit-bias ablation: {rows['heuristic full']:.3f} (bias) > "
               f"{rows['heuristic no-bias']:.3f} (no bias)",
               rows["heuristic full"] > rows["heuristic no-bias"])


class TestTemperatureRecovery:
    # the oracle grid is 2000 linear points spanning both targets, giving
    # 1e-3 spacing so the comparison tolerance is meaningful
    ORACLE_GRID = np.linspace(0.5, 2.5, 2000)

    @pytest.mark.parametrize("true_t", [1.0, 2.0])
    def test_recovery(self, true_t):
        frames = generate_calibration_frames(10_000, true_temp=true_t,
                                             seed=int(true_t * 10))
        model = fit_temperature(frames)
        losses = [nll(frames, t) for t in self.ORACLE_GRID]
        grid_t = float(self.ORACLE_GRID[int(np.argmin(losses))])
        ok = (abs(model.T - true_t) <= 0.05
              and nll(frames, model.T) <= nll(frames, 1.0) + 1e-9
              and abs(model.T - grid_t) <= 1e-3)
        report(f"temperature recovery at T={true_t}: fitted {model.T:.4f}, "
               f"grid oracle {grid_t:.4f}", ok)


class TestGridSearchRecovery:
    def test_planted_point_recovered(self):
        tracklets, gt = generate_planted_grid_corpus(30, seed=0)
        k, n, acc = grid_search_filter(tracklets, gt, GridSpec(seed=0))
        report(f"grid search recovery: got (K={k}, N={n}), "
               f"holdout accuracy {acc:.3f}", (k, n) == (3, 3.5))


class TestTorsoCropExactness:
    def test_three_examples_exact(self):
        joints = {"left_shoulder": (10, 10), "right_shoulder": (30, 10),
                  "left_hip": (10, 50), "right_hip": (30, 50)}
        a = torso_crop(joints, (100, 100), pad=5).as_tuple() == (5, 10, 35, 55)
        b = torso_crop(joints, (100, 100), pad=0).as_tuple() == (10, 10, 30, 50)
        near_edge = {k: (x - 8, y) for k, (x, y) in joints.items()}
        c = torso_crop(near_edge, (100, 100), pad=5).x0 == 0
        report("torso crop exactness (pad-5 left/right/bottom rule)",
               a and b and c)


class TestConfusionReferenceFixture:
    def test_fixture_reproduced_exactly(self):
        import os
        from jerseyfuse.interchange import parse_frame_records, read_ground_truth
        fixtures = os.path.join(os.path.dirname(__file__), "fixtures")
        with open(os.path.join(fixtures, "confusion_ref.jsonl"), "rb") as fp:
            tracklets = parse_frame_records(fp)
        with open(os.path.join(fixtures, "confusion_ref.gt.json")) as fp:
            gt = read_ground_truth(fp)
        conf = digit_confusion(tracklets, gt)
        ok = (conf == np.array([[0.40, 0.07], [0.48, 0.05]])).all()
        report("reference digit-count confusion fixture exact", ok)


class TestChallengeProtocol:
    def test_protocol_semantics(self):
        # Headline SoccerNet accuracies are not reproducible at desk scale
        # (they need the dataset plus fine-tuned models); what is guaranteed
        # is that `evaluate` implements the challenge protocol exactly:
        # per-tracklet exact match with illegible encoded as -1.
        gt = {"a": 10, "b": -1, "c": 7, "d": 99, "e": -1}
        pred = {"a": 10, "b": -1, "c": 70, "d": 99}  # e missing
        rep = evaluate_accuracy(pred, gt)
        ok = (rep.accuracy == 3 / 5
              and rep.missing == ["e"]
              and evaluate_accuracy({"x": -1}, {"x": -1}).accuracy == 1.0
              and evaluate_accuracy({"x": 1}, {"x": -1}).accuracy == 0.0)
        report("challenge protocol: exact match, illegible = -1, "
               "missing counted wrong", ok)

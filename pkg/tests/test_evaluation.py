import os

import numpy as np
import pytest

from jerseyfuse.consolidate import HeuristicConfig
from jerseyfuse.evaluation import (EvaluationError, GridSpec, digit_confusion,
                                   evaluate_accuracy, format_ablation_table,
                                   grid_search_filter, run_ablation,
                                   split_holdout)
from jerseyfuse.interchange import (TrackletLabel, parse_frame_records,
                                    read_ground_truth)
from jerseyfuse.pipeline import PipelineConfig, run
from jerseyfuse.subject_filter import FilterConfig
from jerseyfuse.synthgen import (SynthConfig, generate_corpus,
                                 generate_planted_grid_corpus)

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


class TestEvaluateAccuracy:
    def test_perfect(self):
        labels = {f"t{i}": i for i in range(10)}
        assert evaluate_accuracy(labels, labels).accuracy == 1.0

    def test_illegible_is_a_class(self):
        gt = {"a": 12, "b": -1, "c": 3, "d": -1}
        pred = {"a": 12, "b": 12, "c": 3, "d": -1}
        report = evaluate_accuracy(pred, gt)
        assert report.accuracy == 0.75

    def test_missing_counts_wrong(self):
        gt = {f"t{i}": 5 for i in range(5)}
        pred = {f"t{i}": 5 for i in range(4)}
        report = evaluate_accuracy(pred, gt)
        assert report.accuracy == 0.8
        assert report.missing == ["t4"]

    def test_accepts_label_objects(self):
        gt = {"a": TrackletLabel(7)}
        assert evaluate_accuracy({"a": TrackletLabel(7)}, gt).accuracy == 1.0

    def test_empty_gt_rejected(self):
        with pytest.raises(EvaluationError):
            evaluate_accuracy({}, {})

    def test_order_invariant(self):
        gt = {"a": 1, "b": 2, "c": -1}
        pred = {"c": -1, "a": 1, "b": 3}
        r1 = evaluate_accuracy(pred, gt)
        r2 = evaluate_accuracy(dict(reversed(pred.items())),
                               dict(reversed(gt.items())))
        assert r1.accuracy == r2.accuracy == pytest.approx(2 / 3)


class TestDigitConfusion:
    def test_all_correct_two_digit(self):
        cfg = SynthConfig(n_tracklets=20, frames_per_tracklet=5, p_single=0.0,
                          sharpness=float("inf"), seed=2)
        tracklets, gt, _ = generate_corpus(cfg)
        conf = digit_confusion(tracklets, gt)
        np.testing.assert_allclose(conf, [[1.0, 0.0], [0.0, 0.0]])

    def test_half_truncated(self):
        cfg = SynthConfig(n_tracklets=400, frames_per_tracklet=1, p_single=0.0,
                          eps_trunc=0.5, sharpness=float("inf"), seed=8)
        tracklets, gt, _ = generate_corpus(cfg)
        conf = digit_confusion(tracklets, gt)
        assert conf[1, 0] == pytest.approx(0.5, abs=0.06)

    def test_confusion_reference_fixture_exact(self):
        with open(os.path.join(FIXTURES, "confusion_ref.jsonl"), "rb") as fp:
            tracklets = parse_frame_records(fp)
        with open(os.path.join(FIXTURES, "confusion_ref.gt.json")) as fp:
            gt = read_ground_truth(fp)
        conf = digit_confusion(tracklets, gt)
        np.testing.assert_array_equal(conf, [[0.40, 0.07], [0.48, 0.05]])

    def test_no_qualifying_frames(self):
        with pytest.raises(EvaluationError):
            digit_confusion([], {})


class TestGridSearch:
    def test_tie_breaks_to_smallest_point(self):
        cfg = SynthConfig(n_tracklets=40, frames_per_tracklet=5,
                          sharpness=float("inf"), seed=4)
        tracklets, gt, _ = generate_corpus(cfg)
        k, n, acc = grid_search_filter(tracklets, gt, GridSpec(seed=0))
        assert (k, n) == (1, 2.0)
        assert acc == 1.0

    def test_recovers_planted_point(self):
        tracklets, gt = generate_planted_grid_corpus(20, seed=0)
        k, n, acc = grid_search_filter(tracklets, gt, GridSpec(seed=0))
        assert (k, n) == (3, 3.5)

    def test_reproducible(self):
        tracklets, gt = generate_planted_grid_corpus(10, seed=1)
        a = grid_search_filter(tracklets, gt, GridSpec(seed=5))
        b = grid_search_filter(tracklets, gt, GridSpec(seed=5))
        assert a == b

    def test_too_small_corpus(self):
        tracklets, gt = generate_planted_grid_corpus(2, seed=0)
        with pytest.raises(EvaluationError):
            grid_search_filter(tracklets[:5], gt, GridSpec())

    def test_degenerate_split(self):
        with pytest.raises(EvaluationError):
            split_holdout(list(range(20)), 0.001, 0)


def distractor_corpus(seed=0, n=200):
    cfg = SynthConfig(n_tracklets=n, frames_per_tracklet=20, eps_distract=0.2,
                      cluster_sep=1.0, noise_sigma=0.1, sharpness=1.0,
                      distractor_sharpness=8.0, seed=seed)
    return generate_corpus(cfg)


def base_distractor_pipeline():
    # a coherent 20% distractor mass needs a sub-2.0 radial threshold
    return PipelineConfig(filter_cfg=FilterConfig(K=3, N=1.4))


class TestAblation:
    def test_inert_mechanisms_equal(self):
        cfg = SynthConfig(n_tracklets=40, frames_per_tracklet=5,
                          sharpness=float("inf"), seed=6)
        tracklets, gt, _ = generate_corpus(cfg)
        rows = run_ablation(tracklets, gt)
        accs = {name: acc for name, acc, _ in rows}
        assert max(accs.values()) - min(accs.values()) < 1e-9

    def test_filtering_helps_on_distractors(self):
        tracklets, gt, _ = distractor_corpus(seed=13)
        rows = dict((name, acc) for name, acc, _ in
                    run_ablation(tracklets, gt, base_distractor_pipeline()))
        assert rows["heuristic no-filtering"] < rows["heuristic full"]

    def test_bias_helps_on_truncation(self):
        cfg = SynthConfig(n_tracklets=300, frames_per_tracklet=5,
                          eps_trunc=0.3, seed=10)
        tracklets, gt, _ = generate_corpus(cfg)
        rows = dict((name, acc) for name, acc, _ in run_ablation(tracklets, gt))
        assert rows["heuristic no-bias"] < rows["heuristic full"]

    def test_full_row_matches_direct_run(self):
        tracklets, gt, _ = distractor_corpus(seed=1, n=50)
        base = base_distractor_pipeline()
        rows = dict((name, acc) for name, acc, _ in
                    run_ablation(tracklets, gt, base))
        direct = evaluate_accuracy(run(tracklets, base), gt).accuracy
        assert rows["heuristic full"] == direct

    def test_table_formatting(self):
        rows = [("heuristic full", 0.9, 0.0), ("probabilistic full", 0.85, -0.05)]
        table = format_ablation_table(rows)
        assert "heuristic full" in table and "-0.0500" in table

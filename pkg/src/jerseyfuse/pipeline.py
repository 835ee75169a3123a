"""End-to-end per-tracklet labeling: ball check, subject filter,
legibility gate, consolidation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .calibration import CalibrationModel
from .consolidate import (DEFAULT_LEGIBILITY_THRESHOLD, DEFAULT_P_SINGLE,
                          HeuristicConfig, Prior, PriorMode,
                          consolidate_heuristic, consolidate_probabilistic,
                          gate_legible)
from .geometry import BallReference, detect_ball_tracklet
from .interchange import Tracklet, TrackletLabel
from .subject_filter import FilterConfig, ScoreMode, filter_outliers

# SoccerNet annotates soccer-ball tracklets as jersey number "1"
BALL_LABEL = 1


@dataclass(frozen=True)
class PipelineConfig:
    method: str = "heuristic"  # or "probabilistic"
    use_filter: bool = True
    filter_cfg: FilterConfig = field(default_factory=FilterConfig)
    legibility_threshold: float = DEFAULT_LEGIBILITY_THRESHOLD
    heuristic: HeuristicConfig = field(default_factory=HeuristicConfig)
    p_single: float = DEFAULT_P_SINGLE
    use_prior_bias: bool = True
    prior_mode: PriorMode = PriorMode.PER_FRAME
    temperature: float = 1.0
    ball_ref: Optional[BallReference] = None

    def prior(self) -> Prior:
        return Prior.biased(self.p_single) if self.use_prior_bias else Prior.unbiased()


def label_tracklet(t: Tracklet, cfg: PipelineConfig) -> TrackletLabel:
    if cfg.ball_ref is not None:
        bboxes = [(rec.bbox[2], rec.bbox[3]) for rec in t.frames]
        if detect_ball_tracklet(bboxes, cfg.ball_ref):
            return TrackletLabel(BALL_LABEL)
    kept = None
    if cfg.use_filter and t.embeddings is not None and len(t.embeddings):
        kept = filter_outliers(t.embeddings, cfg.filter_cfg)
    legible = gate_legible(t, cfg.legibility_threshold, kept)
    frames = [t.frames[i] for i in legible]
    if cfg.method == "heuristic":
        return consolidate_heuristic(frames, cfg.heuristic)
    if cfg.method == "probabilistic":
        return consolidate_probabilistic(
            frames, cfg.prior(), CalibrationModel(cfg.temperature), cfg.prior_mode)
    raise ValueError(f"unknown consolidation method: {cfg.method}")


def run(tracklets, cfg: PipelineConfig, jobs: int = 1) -> dict:
    """Label every tracklet; returns {tracklet_id: TrackletLabel}.

    Output is independent of job count (tracklets are independent)."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            labels = list(pool.map(lambda t: label_tracklet(t, cfg), tracklets))
    else:
        labels = [label_tracklet(t, cfg) for t in tracklets]
    return {t.tracklet_id: lab for t, lab in zip(tracklets, labels)}

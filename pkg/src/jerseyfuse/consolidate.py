"""Tracklet-level label consolidation.

Two methods over gated (legible, optionally subject-filtered) frames:

- probabilistic: per digit position, sum log-likelihoods of the
  temperature-scaled character distributions plus a digit prior, then
  take the per-position argmax;
- heuristic: confidence-weighted majority vote over per-frame decodes,
  with an illegibility threshold on summed confidence and a down-weight
  for one-digit votes in mixed-length tracklets.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import EPS, CalibrationModel, apply_temperature
from .interchange import EOS, NUM_CHARS, Tracklet, TrackletLabel

DEFAULT_P_SINGLE = 0.39
DEFAULT_LEGIBILITY_THRESHOLD = 0.5


class PriorMode(enum.Enum):
    # prior log term added once per legible frame (the literal fusion rule)
    PER_FRAME = "per_frame"
    # prior added once per position (conventional Bayesian fusion)
    ONCE = "once"


@dataclass(frozen=True)
class Prior:
    """Digit priors per position.

    Position 1 is uniform over digits with no EOS mass; position 2 puts
    p_single on EOS (one-digit numbers) and spreads the rest uniformly.
    """

    pos1: np.ndarray
    pos2: np.ndarray

    @classmethod
    def biased(cls, p_single: float = DEFAULT_P_SINGLE) -> "Prior":
        pos1 = np.zeros(NUM_CHARS)
        pos1[:10] = 1.0 / 10
        pos2 = np.full(NUM_CHARS, (1.0 - p_single) / 10)
        pos2[EOS] = p_single
        return cls(pos1=pos1, pos2=pos2)

    @classmethod
    def unbiased(cls) -> "Prior":
        # no digit-count bias: position 2 uniform over all 11 characters
        pos1 = np.zeros(NUM_CHARS)
        pos1[:10] = 1.0 / 10
        pos2 = np.full(NUM_CHARS, 1.0 / NUM_CHARS)
        return cls(pos1=pos1, pos2=pos2)


@dataclass(frozen=True)
class HeuristicConfig:
    illegible_threshold: float = 0.35
    one_digit_weight: float = 0.5
    use_bias: bool = True
    use_threshold: bool = True

    def __post_init__(self):
        if self.illegible_threshold < 0:
            raise ValueError("illegible_threshold must be >= 0")
        if not (0.0 < self.one_digit_weight <= 1.0):
            raise ValueError("one_digit_weight must be in (0, 1]")


def gate_legible(tracklet: Tracklet, threshold: float = DEFAULT_LEGIBILITY_THRESHOLD,
                 kept=None) -> list:
    """Indices of frames with legibility >= threshold, intersected with the
    subject-filter survivor set when one is given. Empty means illegible."""
    idx = [i for i, rec in enumerate(tracklet.frames)
           if rec.legibility >= threshold]
    if kept is not None:
        kept = set(kept)
        idx = [i for i in idx if i in kept]
    return idx


def _log_prior(prior: Prior) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.stack([np.log(prior.pos1), np.log(prior.pos2)])


def position_scores(frames, prior: Prior, calib: CalibrationModel,
                    prior_mode: PriorMode = PriorMode.PER_FRAME) -> np.ndarray:
    """(2, 11) matrix of summed log-likelihood-plus-prior scores."""
    log_prior = _log_prior(prior)
    scores = np.zeros((2, NUM_CHARS))
    n = 0
    for rec in frames:
        for j in range(2):
            p = apply_temperature(rec.char_dists[j], calib.T)
            scores[j] += np.log(np.maximum(p, EPS))
        if prior_mode is PriorMode.PER_FRAME:
            scores += log_prior
        n += 1
    if prior_mode is PriorMode.ONCE and n > 0:
        scores += log_prior
    return scores


_TIE_TOL = 1e-9


def _argmax_smallest(row: np.ndarray) -> int:
    # ties break toward the smaller character index (digits before EOS);
    # summation order must not crack a mathematical tie, hence the window
    return int(np.argmax(row >= row.max() - _TIE_TOL))


def consolidate_probabilistic(frames, prior: Prior = None,
                              calib: CalibrationModel = CalibrationModel(1.0),
                              prior_mode: PriorMode = PriorMode.PER_FRAME) -> TrackletLabel:
    """Fuse legible frames' character distributions into one label.

    `frames` is the gated list of FramePrediction; empty input yields the
    illegible label.
    """
    frames = list(frames)
    if not frames:
        return TrackletLabel.illegible()
    if prior is None:
        prior = Prior.biased()
    scores = position_scores(frames, prior, calib, prior_mode)
    d1 = _argmax_smallest(scores[0])
    d2 = _argmax_smallest(scores[1])
    if d1 == EOS:
        # only reachable when every position-1 score is -inf
        return TrackletLabel.illegible()
    if d2 == EOS:
        return TrackletLabel(d1)
    return TrackletLabel(10 * d1 + d2)


def consolidate_heuristic(frames, cfg: HeuristicConfig = HeuristicConfig()) -> TrackletLabel:
    """Confidence-weighted majority vote over per-frame decoded strings."""
    frames = list(frames)
    if not frames:
        return TrackletLabel.illegible()
    if cfg.use_threshold and sum(f.confidence for f in frames) < cfg.illegible_threshold:
        return TrackletLabel.illegible()
    preds = [f.predicted for f in frames if f.predicted]
    if not preds:
        return TrackletLabel.illegible()
    lengths = {len(p) for p in preds}
    mixed = lengths == {1, 2}
    weights: dict = {}
    for f in frames:
        if not f.predicted:
            continue
        w = f.confidence
        if cfg.use_bias and mixed and len(f.predicted) == 1:
            w *= cfg.one_digit_weight
        weights[f.predicted] = weights.get(f.predicted, 0.0) + w
    # ties break toward the smaller numeric label
    best = min(weights.items(), key=lambda kv: (-kv[1], int(kv[0])))
    return TrackletLabel(int(best[0]))

"""Temperature scaling of per-position character distributions.

Recognition models hand us probabilities, not logits; log(p)/T is used as
the logit surrogate, which matches softmax temperature scaling up to the
softmax shift invariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interchange import EOS, TrackletLabel, label_to_digits

EPS = 1e-12
DEFAULT_SEARCH_RANGE = (0.05, 20.0)
LOG_T_TOL = 1e-4


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationModel:
    T: float = 1.0

    def __post_init__(self):
        if self.T <= 0:
            raise CalibrationError(f"temperature must be > 0, got {self.T}")


def apply_temperature(dist: np.ndarray, T: float) -> np.ndarray:
    """softmax(log(dist)/T); zeros floored at EPS before the log."""
    if T <= 0:
        raise CalibrationError(f"temperature must be > 0, got {T}")
    logits = np.log(np.maximum(np.asarray(dist, dtype=np.float64), EPS)) / T
    logits -= logits.max()
    p = np.exp(logits)
    return p / p.sum()


def _stack_frames(frames):
    dists = np.stack([np.asarray(d, dtype=np.float64) for d, _ in frames])
    labels = np.array([gt for _, gt in frames], dtype=np.intp)
    return dists.reshape(-1, dists.shape[-1]), labels.reshape(-1)


def _nll_from_logp(logp: np.ndarray, labels: np.ndarray, T: float) -> float:
    logits = logp / T
    # log softmax, numerically stable
    logits = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(logits).sum(axis=1))
    picked = logits[np.arange(len(labels)), labels]
    return float(np.mean(log_z - picked))


def nll(frames, T: float) -> float:
    """Mean negative log-likelihood over all (frame, position) pairs.

    `frames` is a sequence of (char_dists, gt_digits) where char_dists is
    (2, 11) and gt_digits is the (pos1, pos2) character-index pair.
    """
    if T <= 0:
        raise CalibrationError(f"temperature must be > 0, got {T}")
    frames = list(frames)
    if not frames:
        raise CalibrationError("no labeled frames to score")
    dists, labels = _stack_frames(frames)
    logp = np.log(np.maximum(dists, EPS))
    return _nll_from_logp(logp, labels, T)


def _golden_section(f, lo: float, hi: float, tol: float) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


def fit_temperature(frames, search_range=DEFAULT_SEARCH_RANGE) -> CalibrationModel:
    """Golden-section search on log T minimizing the mean NLL.

    Guaranteed no worse than the identity temperature: the result falls
    back to T=1 when the search does not beat it.
    """
    frames = list(frames)
    if not frames:
        raise CalibrationError("no labeled frames to fit on")
    lo, hi = search_range
    dists, labels = _stack_frames(frames)
    logp = np.log(np.maximum(dists, EPS))

    def objective(log_t):
        return _nll_from_logp(logp, labels, math.exp(log_t))

    log_t = _golden_section(objective, math.log(lo), math.log(hi), LOG_T_TOL)
    t_star = math.exp(log_t)
    if lo <= 1.0 <= hi and _nll_from_logp(logp, labels, 1.0) < _nll_from_logp(
            logp, labels, t_star):
        t_star = 1.0
    return CalibrationModel(T=t_star)


def calibration_frames_from_tracklets(tracklets, gt: dict,
                                      legibility_threshold: float = 0.5) -> list:
    """Collect (char_dists, gt_digits) pairs for temperature fitting.

    Only frames passing the legibility gate on tracklets with a legible
    ground-truth label contribute; per-position labels come from the
    tracklet label's digit decomposition.
    """
    out = []
    for t in tracklets:
        label = gt.get(t.tracklet_id, t.gt_label)
        if isinstance(label, int):
            label = TrackletLabel(label)
        if label is None or label.is_illegible:
            continue
        digits = label_to_digits(label)
        for rec in t.frames:
            if rec.legibility >= legibility_threshold:
                out.append((rec.char_dists, digits))
    return out

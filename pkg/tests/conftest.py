import numpy as np
import pytest

from jerseyfuse.interchange import (EOS, NUM_CHARS, FramePrediction, Tracklet,
                                    decode_argmax)


def dist(support: dict) -> np.ndarray:
    """11-vector from {char_index: mass}; missing mass spread over the rest
    would break normalization, so the support must sum to 1."""
    d = np.zeros(NUM_CHARS)
    for k, v in support.items():
        d[k] = v
    assert abs(d.sum() - 1.0) < 1e-9
    return d


def make_frame(tid="t0", idx=0, dists=None, confidence=0.9, legibility=0.9,
               bbox=(0.0, 0.0, 60.0, 150.0), keypoints=None, embedding_ref=None,
               predicted=None):
    if dists is None:
        dists = np.stack([dist({4: 1.0}), dist({EOS: 1.0})])
    else:
        dists = np.asarray(dists, dtype=float)
    if predicted is None:
        predicted = decode_argmax(dists)
    return FramePrediction(
        tracklet_id=tid, frame_idx=idx, bbox=bbox, legibility=legibility,
        char_dists=dists, confidence=confidence, predicted=predicted,
        keypoints=keypoints, embedding_ref=embedding_ref)


def number_frame(number: int, tid="t0", idx=0, confidence=0.9, legibility=0.9,
                 sharp=1.0, **kw):
    """Frame whose distributions put `sharp` mass on the digits of `number`."""
    rest = (1.0 - sharp) / 10
    if number < 10:
        d1, d2 = number, EOS
    else:
        d1, d2 = number // 10, number % 10
    def vec(k):
        v = np.full(NUM_CHARS, rest)
        v[k] = sharp + rest
        s = v.sum()
        return v / s
    dists = np.stack([vec(d1), vec(d2)])
    return make_frame(tid=tid, idx=idx, dists=dists, confidence=confidence,
                      legibility=legibility, **kw)


def make_tracklet(frames, tid=None, embeddings=None, gt_label=None):
    tid = tid or frames[0].tracklet_id
    return Tracklet(tracklet_id=tid, frames=list(frames),
                    embeddings=embeddings, gt_label=gt_label)

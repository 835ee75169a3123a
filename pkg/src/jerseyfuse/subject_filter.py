"""Unsupervised main-subject filtering over re-ID embeddings.

Iteratively fits an isotropic Gaussian to a tracklet's embedding cluster
and drops frames whose feature vector scores as an outlier, refitting on
the survivors each round.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class FilterError(ValueError):
    pass


class ScoreMode(enum.Enum):
    # z-score of Euclidean distances from the fitted mean; robust in high
    # dimension where raw Mahalanobis radii concentrate near sqrt(d).
    RADIAL_ZSCORE = "radial_zscore"
    # literal reading: distance from the mean in units of sigma*sqrt(d).
    ISOTROPIC_MAHALANOBIS = "isotropic_mahalanobis"


@dataclass(frozen=True)
class FilterConfig:
    K: int = 3
    N: float = 3.5
    mode: ScoreMode = ScoreMode.RADIAL_ZSCORE

    def __post_init__(self):
        if self.K < 1:
            raise FilterError(f"K must be >= 1, got {self.K}")
        if self.N <= 0:
            raise FilterError(f"N must be > 0, got {self.N}")


@dataclass(frozen=True)
class GaussianFit:
    mean: np.ndarray
    sigma: float  # isotropic std; 0 when all points coincide


def fit_isotropic_gaussian(embeddings: np.ndarray) -> GaussianFit:
    """Fit mean and pooled isotropic std (population normalization)."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise FilterError("need a non-empty (m, d) embedding matrix")
    mean = x.mean(axis=0)
    m, d = x.shape
    sigma2 = float(np.sum((x - mean) ** 2)) / (m * d)
    return GaussianFit(mean=mean, sigma=float(np.sqrt(sigma2)))


def _scores(x: np.ndarray, fit: GaussianFit, mode: ScoreMode) -> np.ndarray:
    r = np.linalg.norm(x - fit.mean, axis=1)
    if mode is ScoreMode.RADIAL_ZSCORE:
        std = float(r.std())  # population std
        if std == 0.0:
            return np.zeros_like(r)
        return (r - r.mean()) / std
    d = x.shape[1]
    if fit.sigma == 0.0:
        return np.zeros_like(r)
    return r / (fit.sigma * np.sqrt(d))


def filter_outliers(embeddings: np.ndarray, cfg: FilterConfig = FilterConfig()) -> list:
    """Return the sorted list of kept row indices after up to K rounds.

    Each round refits the Gaussian on the survivors and drops points whose
    score exceeds N; stops early once a round drops nothing. Never returns
    an empty set: if a round would drop everything, the point nearest the
    fitted mean survives.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise FilterError("need a non-empty (m, d) embedding matrix")
    kept = np.arange(x.shape[0])
    for _ in range(cfg.K):
        if len(kept) <= 1:
            break
        sub = x[kept]
        fit = fit_isotropic_gaussian(sub)
        scores = _scores(sub, fit, cfg.mode)
        survive = scores <= cfg.N
        if survive.all():
            break
        if not survive.any():
            r = np.linalg.norm(sub - fit.mean, axis=1)
            survive[int(np.argmin(r))] = True
        kept = kept[survive]
    return kept.tolist()

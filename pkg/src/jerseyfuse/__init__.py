"""jerseyfuse: tracklet-level jersey number inference.

Fuses per-frame scene-text-recognition outputs (character distributions,
confidences, legibility scores, re-ID embeddings, geometry) into a single
jersey-number label per player tracklet, with the evaluation and tuning
harness around it.
"""

__version__ = "0.1.0"

from .calibration import CalibrationModel, apply_temperature, fit_temperature, nll
from .consolidate import (HeuristicConfig, Prior, PriorMode,
                          consolidate_heuristic, consolidate_probabilistic,
                          gate_legible)
from .geometry import BallReference, TorsoBox, detect_ball_tracklet, torso_crop
from .interchange import (EOS, FramePrediction, Tracklet, TrackletLabel,
                          parse_frame_records, read_embeddings,
                          validate_record, write_embeddings,
                          write_frame_records)
from .pipeline import PipelineConfig, label_tracklet, run
from .subject_filter import (FilterConfig, GaussianFit, ScoreMode,
                             filter_outliers, fit_isotropic_gaussian)

__all__ = [
    "CalibrationModel", "apply_temperature", "fit_temperature", "nll",
    "HeuristicConfig", "Prior", "PriorMode",
    "consolidate_heuristic", "consolidate_probabilistic", "gate_legible",
    "BallReference", "TorsoBox", "detect_ball_tracklet", "torso_crop",
    "EOS", "FramePrediction", "Tracklet", "TrackletLabel",
    "parse_frame_records", "read_embeddings", "validate_record",
    "write_embeddings", "write_frame_records",
    "PipelineConfig", "label_tracklet", "run",
    "FilterConfig", "GaussianFit", "ScoreMode",
    "filter_outliers", "fit_isotropic_gaussian",
]

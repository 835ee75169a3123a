"""Pure geometry: torso crop boxes from pose keypoints, ball-tracklet detection.

The torso box spans the four shoulder/hip joints, padded on the left,
right and bottom only (top unpadded), then clamped to image bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TORSO_JOINTS = ("left_shoulder", "right_shoulder", "left_hip", "right_hip")
DEFAULT_PAD = 5


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class TorsoBox:
    x0: int
    y0: int
    x1: int
    y1: int

    def as_tuple(self) -> tuple:
        return (self.x0, self.y0, self.x1, self.y1)


@dataclass(frozen=True)
class BallReference:
    """Average soccer-ball bbox dimensions plus a relative tolerance band."""

    mean_w: float
    mean_h: float
    rel_tolerance: float = 0.2

    def __post_init__(self):
        if self.mean_w <= 0 or self.mean_h <= 0:
            raise GeometryError("ball reference dimensions must be positive")
        if not (0.0 < self.rel_tolerance < 1.0):
            raise GeometryError("rel_tolerance must be in (0, 1)")


def torso_crop(keypoints: dict, image_size: tuple, pad: int = DEFAULT_PAD) -> TorsoBox:
    """Crop rectangle spanned by shoulder and hip joints.

    Pads `pad` pixels on the left, right and bottom (not the top), then
    clamps to [0, W) x [0, H). Raises GeometryError on a missing joint or
    a degenerate (zero-area) clamped box.
    """
    pts = []
    for name in TORSO_JOINTS:
        if name not in keypoints:
            raise GeometryError(f"missing joint: {name}")
        x, y = keypoints[name]
        if not (np.isfinite(x) and np.isfinite(y)):
            raise GeometryError(f"non-finite coordinates for joint {name}")
        pts.append((float(x), float(y)))
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    W, H = image_size
    x0 = int(np.floor(min(xs))) - pad
    x1 = int(np.ceil(max(xs))) + pad
    y0 = int(np.floor(min(ys)))
    y1 = int(np.ceil(max(ys))) + pad
    x0 = max(0, x0)
    y0 = max(0, y0)
    x1 = min(W - 1, x1)
    y1 = min(H - 1, y1)
    if x1 <= x0 or y1 <= y0:
        raise GeometryError("degenerate crop")
    return TorsoBox(x0, y0, x1, y1)


def detect_ball_tracklet(bboxes, ref: BallReference) -> bool:
    """True when the tracklet's median bbox dimensions sit inside the
    reference band [mean*(1-rho), mean*(1+rho)] on both axes."""
    bboxes = list(bboxes)
    if not bboxes:
        raise GeometryError("empty bbox list")
    ws = np.array([b[0] for b in bboxes], dtype=float)
    hs = np.array([b[1] for b in bboxes], dtype=float)
    mw = float(np.median(ws))
    mh = float(np.median(hs))
    rho = ref.rel_tolerance
    ok_w = ref.mean_w * (1 - rho) <= mw <= ref.mean_w * (1 + rho)
    ok_h = ref.mean_h * (1 - rho) <= mh <= ref.mean_h * (1 + rho)
    return ok_w and ok_h

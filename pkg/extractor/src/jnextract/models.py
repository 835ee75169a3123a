"""Model backends for the four pretrained networks, plus a record/replay
inference cache so exports rerun bit-identically without GPUs.

Cache entries are keyed by (model id, image content digest); replay mode
requires every lookup to hit.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

COCO_TORSO_JOINTS = ("left_shoulder", "right_shoulder", "left_hip", "right_hip")
NUM_CHARS = 11


class ModelError(RuntimeError):
    """Raised when a model cannot be loaded or a replay cache misses."""


class Backend:
    """Per-image inference over the four networks.

    Every method takes the raw image bytes plus the decoded RGB array and
    returns plain Python/numpy data (json-serializable via the cache codec).
    """

    def legibility(self, data: bytes, image) -> float:
        raise NotImplementedError

    def keypoints(self, data: bytes, image) -> dict:
        raise NotImplementedError

    def embedding(self, data: bytes, image) -> np.ndarray:
        raise NotImplementedError

    def str_distributions(self, data: bytes, crop) -> np.ndarray:
        """Per-position character distributions, shape (2, 11)."""
        raise NotImplementedError


class StubBackend(Backend):
    """Deterministic pseudo-model keyed by the image content digest.

    Used to record fixture caches and to exercise the pipeline without
    real checkpoints; outputs are stable across machines and reruns.
    """

    def _rng(self, data: bytes, salt: str) -> np.random.Generator:
        digest = hashlib.sha256(salt.encode() + data).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "little"))

    def legibility(self, data, image) -> float:
        return float(self._rng(data, "legibility").uniform(0.0, 1.0))

    def keypoints(self, data, image) -> dict:
        h, w = image.shape[:2]
        rng = self._rng(data, "pose")
        cx, cy = w / 2, h / 2
        sw, hh = w * 0.3, h * 0.25
        jitter = rng.uniform(-2, 2, size=8)
        return {
            "left_shoulder": (cx - sw + jitter[0], cy - hh + jitter[1]),
            "right_shoulder": (cx + sw + jitter[2], cy - hh + jitter[3]),
            "left_hip": (cx - sw + jitter[4], cy + hh + jitter[5]),
            "right_hip": (cx + sw + jitter[6], cy + hh + jitter[7]),
        }

    def embedding(self, data, image) -> np.ndarray:
        return self._rng(data, "reid").normal(0, 1, size=128).astype(np.float32)

    def str_distributions(self, data, crop) -> np.ndarray:
        rng = self._rng(data, "str")
        return rng.dirichlet(np.ones(NUM_CHARS), size=2)


class TorchBackend(Backend):
    """Thin wrappers over real checkpoints (TorchScript modules).

    Checkpoint paths come from ExtractorConfig; a missing or unloadable
    checkpoint is a hard error. The legibility model must map an image
    tensor to a single logit, the pose model to 17 COCO keypoints, the
    re-ID model to a feature vector and the STR model to (positions, 11)
    character logits.
    """

    def __init__(self, legibility_path, pose_path, reid_path, str_path,
                 device="cpu"):
        try:
            import torch
        except ImportError as e:
            raise ModelError("torch is required for TorchBackend") from e
        self._torch = torch
        self.device = device
        self.models = {}
        for name, path in (("legibility", legibility_path), ("pose", pose_path),
                           ("reid", reid_path), ("str", str_path)):
            if not os.path.exists(path):
                raise ModelError(f"{name} checkpoint not found: {path}")
            try:
                self.models[name] = torch.jit.load(path, map_location=device).eval()
            except Exception as e:
                raise ModelError(f"failed to load {name} model: {e}") from e

    def _tensor(self, image):
        arr = np.asarray(image, dtype=np.float32) / 255.0
        return self._torch.from_numpy(arr).permute(2, 0, 1)[None].to(self.device)

    def legibility(self, data, image) -> float:
        with self._torch.no_grad():
            logit = self.models["legibility"](self._tensor(image)).reshape(-1)[0]
        return float(self._torch.sigmoid(logit))

    def keypoints(self, data, image) -> dict:
        from .coco import COCO_KEYPOINT_NAMES
        with self._torch.no_grad():
            pts = self.models["pose"](self._tensor(image)).reshape(-1, 2)
        return {name: (float(x), float(y))
                for name, (x, y) in zip(COCO_KEYPOINT_NAMES, pts.tolist())}

    def embedding(self, data, image) -> np.ndarray:
        with self._torch.no_grad():
            vec = self.models["reid"](self._tensor(image)).reshape(-1)
        return vec.cpu().numpy().astype(np.float32)

    def str_distributions(self, data, crop) -> np.ndarray:
        with self._torch.no_grad():
            logits = self.models["str"](self._tensor(crop))
        probs = self._torch.softmax(logits.reshape(-1, NUM_CHARS), dim=1)
        out = probs.cpu().numpy()
        # labels are capped at 2 characters; discard positions past the cap
        # and pad missing positions with a certain end-of-string
        if out.shape[0] >= 2:
            return out[:2]
        pad = np.zeros((2 - out.shape[0], NUM_CHARS))
        pad[:, NUM_CHARS - 1] = 1.0
        return np.vstack([out, pad])


_CALLS = ("legibility", "keypoints", "embedding", "str_distributions")


def _encode(kind, value):
    if kind == "legibility":
        return value
    if kind == "keypoints":
        return {k: [float(v) for v in value[k]] for k in sorted(value)}
    return np.asarray(value).tolist()


def _decode(kind, value):
    if kind == "legibility":
        return float(value)
    if kind == "keypoints":
        return {k: (float(x), float(y)) for k, (x, y) in value.items()}
    if kind == "embedding":
        return np.asarray(value, dtype=np.float32)
    return np.asarray(value, dtype=np.float64)


class CachingBackend(Backend):
    """Record/replay wrapper around another backend.

    In record mode every inner call is stored; in replay mode the inner
    backend is never consulted and a miss is an error.
    """

    def __init__(self, inner, cache_path, mode, model_ids):
        assert mode in ("record", "replay")
        self.inner = inner
        self.path = cache_path
        self.mode = mode
        self.model_ids = model_ids
        self.cache = {}
        if os.path.exists(cache_path):
            with open(cache_path) as fp:
                self.cache = json.load(fp)
        elif mode == "replay":
            raise ModelError(f"replay cache not found: {cache_path}")

    def _key(self, kind, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        return f"{self.model_ids[kind]}:{kind}:{digest}"

    def _call(self, kind, data, image):
        key = self._key(kind, data)
        if key in self.cache:
            return _decode(kind, self.cache[key])
        if self.mode == "replay":
            raise ModelError(f"replay cache miss for {key}")
        value = getattr(self.inner, kind)(data, image)
        self.cache[key] = _encode(kind, value)
        # round-trip through the codec so record and replay runs agree
        # bit for bit (dict ordering, dtype width)
        return _decode(kind, self.cache[key])

    def legibility(self, data, image):
        return self._call("legibility", data, image)

    def keypoints(self, data, image):
        return self._call("keypoints", data, image)

    def embedding(self, data, image):
        return self._call("embedding", data, image)

    def str_distributions(self, data, crop):
        return self._call("str_distributions", data, crop)

    def save(self):
        if self.mode == "record":
            with open(self.path, "w") as fp:
                json.dump(self.cache, fp, indent=1, sort_keys=True)


def build_backend(cfg):
    """Backend from config: stub model ids use the deterministic stub,
    anything else is treated as TorchScript checkpoint paths."""
    ids = {"legibility": cfg.legibility_model, "keypoints": cfg.pose_model,
           "embedding": cfg.reid_model, "str_distributions": cfg.str_model}
    if cfg.cache_mode == "replay":
        inner = Backend()  # never consulted
    elif all(v == "stub" for v in ids.values()):
        inner = StubBackend()
    else:
        inner = TorchBackend(cfg.legibility_model, cfg.pose_model,
                             cfg.reid_model, cfg.str_model, cfg.device)
    if cfg.cache_mode in ("record", "replay"):
        return CachingBackend(inner, cfg.cache_path, cfg.cache_mode, ids)
    return inner

"""On-disk interchange formats for frame predictions, embeddings and ground truth.

Frame records are UTF-8 JSON-lines, one record per line. Embeddings live
in a binary sidecar (JNRE format) so round-trips stay bit-exact. Ground
truth is a flat JSON object mapping tracklet id to an integer label,
with -1 meaning the tracklet is illegible.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

import numpy as np

# Character index layout for the per-position distributions: digits '0'..'9'
# occupy indices 0..9, the end-of-string character index 10.
NUM_CHARS = 11
EOS = 10

DIST_SUM_TOL = 1e-6

EMBED_MAGIC = b"JNRE"
EMBED_VERSION = 1

ILLEGIBLE = -1


class InterchangeError(ValueError):
    """Raised on malformed interchange input."""


@dataclass(frozen=True)
class TrackletLabel:
    """A jersey number in 0..99, or illegible (serialized as -1)."""

    value: int

    def __post_init__(self):
        if not (self.value == ILLEGIBLE or 0 <= self.value <= 99):
            raise InterchangeError(f"label out of range: {self.value}")

    @property
    def is_illegible(self) -> bool:
        return self.value == ILLEGIBLE

    @classmethod
    def illegible(cls) -> "TrackletLabel":
        return cls(ILLEGIBLE)


@dataclass(frozen=True)
class FramePrediction:
    tracklet_id: str
    frame_idx: int
    bbox: tuple  # (x, y, w, h) in pixels
    legibility: float
    char_dists: np.ndarray  # shape (2, 11), rows sum to 1
    confidence: float
    predicted: str
    keypoints: Optional[dict] = None  # joint name -> (x, y)
    embedding_ref: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "char_dists",
                           np.asarray(self.char_dists, dtype=np.float64))


@dataclass
class Tracklet:
    tracklet_id: str
    frames: list  # of FramePrediction, sorted by frame_idx
    embeddings: Optional[np.ndarray] = None  # (count, dim), one row per embedding_ref
    gt_label: Optional[TrackletLabel] = None

    def __len__(self) -> int:
        return len(self.frames)


def decode_argmax(char_dists: np.ndarray) -> str:
    """Per-position argmax decode of a (2, 11) distribution pair.

    Position 1 yields a digit unless EOS wins (empty string); position 2
    contributes a digit unless EOS wins.
    """
    d = np.asarray(char_dists)
    k1 = int(np.argmax(d[0]))
    if k1 == EOS:
        return ""
    out = str(k1)
    k2 = int(np.argmax(d[1]))
    if k2 != EOS:
        out += str(k2)
    return out


def validate_record(rec: FramePrediction) -> list:
    """Return a list of human-readable invariant violations (empty if valid)."""
    out = []
    if rec.frame_idx < 0:
        out.append(f"frame_idx is negative: {rec.frame_idx}")
    if len(rec.bbox) != 4:
        out.append(f"bbox has {len(rec.bbox)} entries, expected 4")
    else:
        _, _, w, h = rec.bbox
        if w <= 0 or h <= 0:
            out.append(f"bbox has non-positive size: w={w}, h={h}")
    if not (0.0 <= rec.legibility <= 1.0):
        out.append(f"legibility out of [0,1]: {rec.legibility}")
    if not (0.0 <= rec.confidence <= 1.0):
        out.append(f"confidence out of [0,1]: {rec.confidence}")
    dists = rec.char_dists
    if dists.shape != (2, NUM_CHARS):
        out.append(f"char_dists has shape {dists.shape}, expected (2, {NUM_CHARS})")
        return out
    for j in range(2):
        if np.any(dists[j] < 0):
            out.append(f"char_dists[{j}] has negative entries")
        s = float(dists[j].sum())
        if abs(s - 1.0) > DIST_SUM_TOL:
            out.append(f"char_dists[{j}] sums to {s:.6f}")
    expect = decode_argmax(dists)
    if rec.predicted != expect:
        out.append(
            f"predicted is {rec.predicted!r} but argmax decode is {expect!r}")
    if rec.embedding_ref is not None and rec.embedding_ref < 0:
        out.append(f"embedding_ref is negative: {rec.embedding_ref}")
    return out


_REQUIRED_KEYS = ("tracklet_id", "frame_idx", "bbox", "legibility",
                  "char_dists", "confidence", "predicted")


def _record_from_obj(obj: dict, line_no: int) -> FramePrediction:
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise InterchangeError(f"line {line_no}: missing key {key!r}")
    kp = obj.get("keypoints")
    if kp is not None:
        kp = {name: (float(x), float(y)) for name, (x, y) in kp.items()}
    rec = FramePrediction(
        tracklet_id=str(obj["tracklet_id"]),
        frame_idx=int(obj["frame_idx"]),
        bbox=tuple(float(v) for v in obj["bbox"]),
        legibility=float(obj["legibility"]),
        char_dists=np.asarray(obj["char_dists"], dtype=np.float64),
        confidence=float(obj["confidence"]),
        predicted=str(obj["predicted"]),
        keypoints=kp,
        embedding_ref=(None if obj.get("embedding_ref") is None
                       else int(obj["embedding_ref"])),
    )
    violations = validate_record(rec)
    if violations:
        raise InterchangeError(f"line {line_no}: {violations[0]}")
    return rec


def parse_frame_records(stream) -> list:
    """Parse a JSON-lines stream of frame records into a list of Tracklet.

    Accepts bytes, str, or a file-like object. Records are grouped by
    tracklet_id (tracklets sorted lexicographically by id) and sorted by
    frame_idx within each tracklet. Raises InterchangeError naming the
    offending line on any malformed input.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        text = stream.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")

    groups: dict = {}
    seen = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise InterchangeError(f"line {line_no}: malformed JSON ({e.msg})") from e
        rec = _record_from_obj(obj, line_no)
        key = (rec.tracklet_id, rec.frame_idx)
        if key in seen:
            raise InterchangeError(
                f"line {line_no}: duplicate (tracklet_id, frame_idx) = {key}")
        seen.add(key)
        groups.setdefault(rec.tracklet_id, []).append(rec)

    tracklets = []
    for tid in sorted(groups):
        frames = sorted(groups[tid], key=lambda r: r.frame_idx)
        tracklets.append(Tracklet(tracklet_id=tid, frames=frames))
    return tracklets


def record_to_obj(rec: FramePrediction) -> dict:
    obj = {
        "tracklet_id": rec.tracklet_id,
        "frame_idx": rec.frame_idx,
        "bbox": list(rec.bbox),
        "legibility": rec.legibility,
        "char_dists": [list(map(float, row)) for row in rec.char_dists],
        "confidence": rec.confidence,
        "predicted": rec.predicted,
    }
    if rec.keypoints is not None:
        obj["keypoints"] = {k: list(v) for k, v in rec.keypoints.items()}
    if rec.embedding_ref is not None:
        obj["embedding_ref"] = rec.embedding_ref
    return obj


def write_frame_records(tracklets: Iterable[Tracklet], fp: IO) -> None:
    """Write tracklets back to JSON-lines (inverse of parse_frame_records)."""
    for t in tracklets:
        for rec in t.frames:
            fp.write(json.dumps(record_to_obj(rec)) + "\n")


def read_embeddings(data) -> np.ndarray:
    """Read a JNRE embedding sidecar; returns a (count, dim) float32 matrix.

    Layout: magic "JNRE", u32 version (=1), u32 dim, u64 count, all
    little-endian, then count*dim IEEE-754 LE float32 values.
    """
    if not isinstance(data, (bytes, bytearray)):
        data = data.read()
    data = bytes(data)
    header_len = 4 + 4 + 4 + 8
    if len(data) < header_len or data[:4] != EMBED_MAGIC:
        raise InterchangeError("bad magic: not a JNRE embedding file")
    version, dim = struct.unpack_from("<II", data, 4)
    (count,) = struct.unpack_from("<Q", data, 12)
    if version != EMBED_VERSION:
        raise InterchangeError(f"unsupported JNRE version {version}")
    expected = count * dim * 4
    payload = data[header_len:]
    if len(payload) != expected:
        raise InterchangeError(
            f"expected {expected} payload bytes, found {len(payload)}")
    mat = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    return mat.copy()


def write_embeddings(mat: np.ndarray, fp: IO) -> None:
    mat = np.ascontiguousarray(mat, dtype="<f4")
    if mat.ndim != 2:
        raise InterchangeError(f"embedding matrix must be 2-D, got {mat.ndim}-D")
    count, dim = mat.shape
    fp.write(EMBED_MAGIC)
    fp.write(struct.pack("<IIQ", EMBED_VERSION, dim, count))
    fp.write(mat.tobytes())


def attach_embeddings(tracklets: Iterable[Tracklet], mat: np.ndarray) -> None:
    """Slice the sidecar matrix into per-tracklet embedding blocks in place.

    Rows are gathered in frame order via each frame's embedding_ref.
    """
    for t in tracklets:
        refs = [f.embedding_ref for f in t.frames if f.embedding_ref is not None]
        if not refs:
            continue
        bad = [r for r in refs if r >= len(mat)]
        if bad:
            raise InterchangeError(
                f"tracklet {t.tracklet_id}: embedding_ref {bad[0]} out of range "
                f"(sidecar has {len(mat)} rows)")
        t.embeddings = mat[refs]


def read_ground_truth(data) -> dict:
    """Read a ground-truth JSON object: tracklet_id -> TrackletLabel."""
    if not isinstance(data, (bytes, str)):
        data = data.read()
    obj = json.loads(data)
    if not isinstance(obj, dict):
        raise InterchangeError("ground truth must be a JSON object")
    return {str(k): TrackletLabel(int(v)) for k, v in obj.items()}


def write_ground_truth(gt: dict, fp: IO) -> None:
    enc = {k: (v.value if isinstance(v, TrackletLabel) else int(v))
           for k, v in sorted(gt.items())}
    json.dump(enc, fp, indent=0, sort_keys=True)
    fp.write("\n")


def attach_ground_truth(tracklets: Iterable[Tracklet], gt: dict) -> None:
    for t in tracklets:
        if t.tracklet_id in gt:
            t.gt_label = gt[t.tracklet_id]


def label_to_digits(label: TrackletLabel) -> tuple:
    """Map a legible label to per-position character indices (pos1, pos2).

    Single-digit numbers put EOS at position 2.
    """
    if label.is_illegible:
        raise InterchangeError("illegible label has no digit decomposition")
    n = label.value
    if n < 10:
        return n, EOS
    return n // 10, n % 10


def label_from_string(s: str) -> TrackletLabel:
    """Decoded digit string -> label; empty string means illegible."""
    if s == "":
        return TrackletLabel.illegible()
    return TrackletLabel(int(s))

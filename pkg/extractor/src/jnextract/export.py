"""Walk a folder of tracklet crops, run the four models on every frame and
write the interchange pair: a JSON-lines prediction file plus a binary
embedding sidecar.

Layout expected under image_root:

    image_root/
        <tracklet_id>/
            <frame>.jpg

Frame order within a tracklet is the numeric sort of the file stem when all
stems are integers, else lexicographic.
"""

from __future__ import annotations

import json
import logging
import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from jerseyfuse.geometry import GeometryError, torso_crop
from jerseyfuse.interchange import (
    FramePrediction,
    Tracklet,
    decode_argmax,
    write_embeddings,
    write_frame_records,
)

log = logging.getLogger("jnextract")

IMAGE_EXTS = (".jpg", ".jpeg", ".png", ".bmp")


class ExportError(RuntimeError):
    pass


def _frame_key(stem: str):
    return (0, int(stem), stem) if stem.isdigit() else (1, 0, stem)


def list_frames(image_root):
    """(tracklet_id, frame_idx, path) triples in deterministic order."""
    if not os.path.isdir(image_root):
        raise ExportError(f"image root not found: {image_root}")
    out = []
    for tid in sorted(os.listdir(image_root)):
        tdir = os.path.join(image_root, tid)
        if not os.path.isdir(tdir):
            continue
        names = [n for n in sorted(os.listdir(tdir))
                 if os.path.splitext(n)[1].lower() in IMAGE_EXTS]
        names.sort(key=lambda n: _frame_key(os.path.splitext(n)[0]))
        for idx, name in enumerate(names):
            out.append((tid, idx, os.path.join(tdir, name)))
    return out


def extract_frame(backend, tid, frame_idx, path, embedding_ref):
    """Run all four models on one image file.

    Returns (FramePrediction, embedding) or None when the file is not a
    readable image.
    """
    with open(path, "rb") as fp:
        data = fp.read()
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"))
    except (UnidentifiedImageError, OSError):
        return None
    legibility = backend.legibility(data, rgb)
    h, w = rgb.shape[:2]
    keypoints = backend.keypoints(data, rgb)
    embedding = np.asarray(backend.embedding(data, rgb), dtype=np.float32)
    try:
        box = torso_crop(keypoints, (w, h))
    except GeometryError:
        box = None
    crop = rgb[box.y0:box.y1 + 1, box.x0:box.x1 + 1] if box is not None else rgb
    dists = np.asarray(backend.str_distributions(data, crop), dtype=np.float64)
    dists /= dists.sum(axis=1, keepdims=True)
    rec = FramePrediction(
        tracklet_id=tid,
        frame_idx=frame_idx,
        bbox=(0.0, 0.0, float(w), float(h)),
        legibility=float(legibility),
        char_dists=dists,
        confidence=float(np.prod(dists.max(axis=1))),
        predicted=decode_argmax(dists),
        keypoints={k: (float(x), float(y)) for k, (x, y) in keypoints.items()},
        embedding_ref=embedding_ref,
    )
    return rec, embedding


def export_frames(cfg, backend):
    """Run the full export; returns (n_frames, n_skipped)."""
    frames = list_frames(cfg.image_root)
    per_tracklet: dict = {}
    embeddings = []
    skipped = []
    for tid, frame_idx, path in frames:
        result = extract_frame(backend, tid, frame_idx, path, len(embeddings))
        if result is None:
            log.warning("skipping unreadable image: %s", path)
            skipped.append(path)
            continue
        rec, emb = result
        per_tracklet.setdefault(tid, []).append(rec)
        embeddings.append(emb)
    tracklets = [Tracklet(tracklet_id=tid, frames=recs)
                 for tid, recs in sorted(per_tracklet.items())]
    dim = embeddings[0].shape[0] if embeddings else 0
    mat = (np.stack(embeddings) if embeddings
           else np.zeros((0, dim), dtype=np.float32))
    with open(cfg.out_prefix + ".jsonl", "w") as fp:
        write_frame_records(tracklets, fp)
    with open(cfg.out_prefix + ".jnre", "wb") as fp:
        write_embeddings(mat, fp)
    if cfg.skip_report:
        with open(cfg.skip_report, "w") as fp:
            json.dump({"skipped": skipped}, fp, indent=1)
    if hasattr(backend, "save"):
        backend.save()
    return sum(len(t.frames) for t in tracklets), len(skipped)

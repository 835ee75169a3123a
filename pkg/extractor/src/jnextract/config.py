"""Extractor configuration: model identifiers, paths and run options."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields


@dataclass
class ExtractorConfig:
    image_root: str = ""
    out_prefix: str = "out"          # writes PREFIX.jsonl / PREFIX.jnre
    legibility_model: str = "stub"   # model id or checkpoint path
    pose_model: str = "stub"
    reid_model: str = "stub"
    str_model: str = "stub"
    batch_size: int = 16
    device: str = "cpu"
    cache_path: str = ""             # inference cache file
    cache_mode: str = "off"          # off | record | replay
    skip_report: str = ""            # where to list unreadable images

    @classmethod
    def from_file(cls, path: str) -> "ExtractorConfig":
        with open(path) as fp:
            obj = json.load(fp)
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    def validate(self) -> None:
        if self.cache_mode not in ("off", "record", "replay"):
            raise ValueError(f"bad cache_mode: {self.cache_mode}")
        if self.cache_mode in ("record", "replay") and not self.cache_path:
            raise ValueError("cache_mode requires cache_path")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

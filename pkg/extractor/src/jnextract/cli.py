"""Command line entry point for the frame-level extractor."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ExtractorConfig
from .export import ExportError, export_frames
from .models import ModelError, build_backend


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(64, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="jnextract",
                description="Run the per-frame model stack over tracklet "
                            "image folders and emit interchange files.")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--image-root", help="folder of tracklet_id/frame.jpg")
    p.add_argument("--out-prefix", help="output path prefix")
    p.add_argument("--cache", dest="cache_path", help="inference cache file")
    p.add_argument("--cache-mode", choices=("off", "record", "replay"))
    p.add_argument("--skip-report", help="JSON file listing skipped images")
    return p


def resolve_config(args) -> ExtractorConfig:
    cfg = ExtractorConfig.from_file(args.config) if args.config else ExtractorConfig()
    for name in ("image_root", "out_prefix", "cache_path", "cache_mode",
                 "skip_report"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    if not cfg.image_root:
        raise ValueError("image_root is required")
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        backend = build_backend(cfg)
        n_frames, n_skipped = export_frames(cfg, backend)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ModelError, ExportError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {n_frames} frames ({n_skipped} skipped) to "
          f"{cfg.out_prefix}.jsonl / {cfg.out_prefix}.jnre")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Frame-level feature extractor feeding the jerseyfuse interchange format."""

from .config import ExtractorConfig
from .export import export_frames, extract_frame, list_frames
from .models import (
    Backend,
    CachingBackend,
    ModelError,
    StubBackend,
    build_backend,
)

__version__ = "0.1.0"

__all__ = [
    "Backend",
    "CachingBackend",
    "ExtractorConfig",
    "ModelError",
    "StubBackend",
    "build_backend",
    "export_frames",
    "extract_frame",
    "list_frames",
]

"""Video-to-detection-stream adapter for the rallyseg pipeline."""

from .backends import Backend, ClassicalBackend, ExtractorError, make_backend
from .pipeline import ExtractOptions, ExtractResult, extract

__all__ = [
    "Backend",
    "ClassicalBackend",
    "ExtractorError",
    "ExtractOptions",
    "ExtractResult",
    "extract",
    "make_backend",
]

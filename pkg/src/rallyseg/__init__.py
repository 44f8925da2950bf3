"""Unsupervised player retrieval and rally segmentation toolkit."""

from .model import (
    BBox,
    Detection,
    FrameDetections,
    PipelineParams,
    RallyAnnotation,
    TableCenter,
    validate_stream,
)

__all__ = [
    "BBox",
    "Detection",
    "FrameDetections",
    "PipelineParams",
    "RallyAnnotation",
    "TableCenter",
    "validate_stream",
]

__version__ = "0.1.0"

"""Shared domain types and stream validation.

All types are frozen dataclasses: immutable after construction and safe to
share across threads. They deliberately do not self-validate, so that
malformed inputs remain representable; ``validate_stream`` is the single
authority on which streams the rest of the pipeline accepts.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in absolute pixel coordinates, (x, y) = top-left."""

    x: float
    y: float
    w: float
    h: float

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass(frozen=True)
class Detection:
    """One candidate person detection: box, class probability, re-id embedding."""

    bbox: BBox
    person_prob: float
    reid: tuple[float, ...]
    class_label: str = "person"


@dataclass(frozen=True)
class FrameDetections:
    """All candidate detections of a single video frame."""

    video_id: str
    frame_index: int
    t: float
    detections: tuple[Detection, ...] = ()


@dataclass(frozen=True)
class TableCenter:
    """Table centroid in pixels, together with the image bounds it lives in."""

    cx: float
    cy: float
    image_w: float
    image_h: float


@dataclass(frozen=True)
class RallyAnnotation:
    """Sorted, non-overlapping (start_s, end_s) rally intervals."""

    intervals: tuple[tuple[float, float], ...] = ()

    def contains(self, t: float) -> bool:
        """True when t falls inside a rally (start inclusive, end exclusive)."""
        return any(s <= t < e for s, e in self.intervals)

    def validate(self) -> None:
        from .errors import IngestError

        prev_end = None
        for s, e in self.intervals:
            if s >= e:
                raise IngestError(f"rally interval has start_s {s} >= end_s {e}")
            if prev_end is not None and s < prev_end:
                raise IngestError(
                    f"rally intervals overlap: previous ends at {prev_end}, next starts at {s}"
                )
            prev_end = e


@dataclass(frozen=True)
class PipelineParams:
    """Tunable knobs shared across the retrieval/segmentation pipeline.

    alpha, beta     weights of the person-probability and table-proximity
                    score terms (equal by default; only their ratio matters
                    for ranking).
    kappa           weight of the cluster-distance penalty in the boosted
                    score; kept high so appearance dominates.
    t_l, t_h        low/high fitness thresholds gating outlier elimination.
    m_frames        number of uniformly sampled frames feeding the
                    aggregation buffer (the buffer holds up to 2*m_frames).
    n_max           number of mixture components in the first clustering pass.
    window_half_s   half-width of training/inference windows, in seconds.
    frameskip       temporal subsampling stride, in frames.
    neg_ratio       negatives per positive in the training set.
    tolerance_s     matching tolerance for serve/end point evaluation.
    threshold       operating confidence threshold for segmentation.
    min_rally_s     segmented intervals shorter than this are dropped.
    """

    alpha: float = 0.5
    beta: float = 0.5
    kappa: float = 5.0
    t_l: float = 0.5
    t_h: float = 1.2
    m_frames: int = 100
    n_max: int = 3
    window_half_s: float = 4.0
    frameskip: int = 5
    neg_ratio: int = 5
    tolerance_s: float = 3.0
    threshold: float = 0.5
    min_rally_s: float = 1.0
    normalize_reid: bool = True
    max_boost_rounds: int = 3
    cluster_mode: str = "em"
    variance_floor: float = 1e-6
    em_max_iter: int = 100
    em_tol: float = 1e-6

    def validate(self) -> None:
        from .errors import RallysegError

        checks = [
            (self.alpha > 0, f"alpha must be > 0, got {self.alpha}"),
            (self.beta > 0, f"beta must be > 0, got {self.beta}"),
            (self.kappa >= 0, f"kappa must be >= 0, got {self.kappa}"),
            (0 < self.t_l < 1, f"t_l must be in (0, 1), got {self.t_l}"),
            (self.t_h > self.t_l, f"t_h must exceed t_l, got {self.t_h} <= {self.t_l}"),
            (self.m_frames >= 1, f"m_frames must be >= 1, got {self.m_frames}"),
            (self.n_max >= 1, f"n_max must be >= 1, got {self.n_max}"),
            (self.window_half_s > 0, f"window_half_s must be > 0, got {self.window_half_s}"),
            (self.frameskip >= 1, f"frameskip must be >= 1, got {self.frameskip}"),
            (self.neg_ratio >= 1, f"neg_ratio must be >= 1, got {self.neg_ratio}"),
            (self.tolerance_s > 0, f"tolerance_s must be > 0, got {self.tolerance_s}"),
            (0 < self.threshold < 1, f"threshold must be in (0, 1), got {self.threshold}"),
            (self.min_rally_s >= 0, f"min_rally_s must be >= 0, got {self.min_rally_s}"),
            (self.max_boost_rounds >= 1, f"max_boost_rounds must be >= 1, got {self.max_boost_rounds}"),
            (self.cluster_mode in ("em", "kmeans"), f"unknown cluster_mode {self.cluster_mode!r}"),
        ]
        for ok, message in checks:
            if not ok:
                raise RallysegError(message)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_stream: totals plus the first violation, if any."""

    n_frames: int
    n_detections: int
    violation: str | None = None
    frame_index: int | None = None

    @property
    def ok(self) -> bool:
        return self.violation is None


def validate_stream(frames) -> ValidationReport:
    """Check every stream invariant; report the first violation found.

    Checks, in order per frame: frame_index ordering, timestamp ordering and
    sign, box geometry, person_prob range, and re-id dimension consistency
    (the first detection of the stream fixes the dimension).
    """
    n_frames = 0
    n_det = 0
    prev_index: int | None = None
    prev_t: float | None = None
    d_reid: int | None = None

    for f in frames:
        def fail(msg: str) -> ValidationReport:
            return ValidationReport(n_frames, n_det, msg, f.frame_index)

        if f.frame_index < 0:
            return fail(f"negative frame_index {f.frame_index}")
        if prev_index is not None and f.frame_index <= prev_index:
            return fail(
                f"frame_index not strictly increasing: {prev_index} then {f.frame_index}"
            )
        if f.t < 0:
            return fail(f"negative timestamp {f.t}")
        if prev_t is not None and f.t < prev_t:
            return fail(f"timestamp decreasing: {prev_t} then {f.t}")

        for k, d in enumerate(f.detections):
            b = d.bbox
            if b.w <= 0 or b.h <= 0:
                return fail(f"detection {k}: non-positive box size {b.w}x{b.h}")
            if b.x < 0 or b.y < 0:
                return fail(f"detection {k}: negative box origin ({b.x}, {b.y})")
            if not 0.0 <= d.person_prob <= 1.0:
                return fail(f"detection {k}: person_prob {d.person_prob} outside [0, 1]")
            if d_reid is None:
                d_reid = len(d.reid)
            elif len(d.reid) != d_reid:
                return fail(
                    f"detection {k}: reid dimension {len(d.reid)} != stream dimension {d_reid}"
                )
            n_det += 1

        n_frames += 1
        prev_index = f.frame_index
        prev_t = f.t

    return ValidationReport(n_frames, n_det)


def stream_reid_dim(frames) -> int | None:
    """Re-id dimension declared by the first detection, or None if no detections."""
    for f in frames:
        for d in f.detections:
            return len(d.reid)
    return None

"""Sliding-window inference and confidence thresholding over a full video.

Confidences are produced for every window position at stride = frameskip
frames (no partial windows), timestamped at the window center. Maximal runs
of confidence >= threshold become rally intervals; runs shorter than
min_rally_s are dropped; interval boundaries are the serve and end-of-rally
points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierModel, predict
from .errors import SegmenterError
from .model import FrameDetections, PipelineParams, TableCenter
from .sampler import FrameFeatureProvider, infer_fps, window_steps


@dataclass(frozen=True)
class RallySegmentation:
    confidences: tuple[tuple[float, float], ...]  # (t, p), sorted by t
    intervals: tuple[tuple[float, float], ...]
    serves: tuple[float, ...]
    ends: tuple[float, ...]

    def to_obj(self, video_id: str = "") -> dict:
        return {
            "video_id": video_id,
            "intervals": [{"start_s": s, "end_s": e} for s, e in self.intervals],
            "serves": list(self.serves),
            "ends": list(self.ends),
        }

    @staticmethod
    def from_obj(obj: dict, confidences=()) -> "RallySegmentation":
        intervals = tuple((float(r["start_s"]), float(r["end_s"])) for r in obj["intervals"])
        return RallySegmentation(
            confidences=tuple(confidences),
            intervals=intervals,
            serves=tuple(float(v) for v in obj["serves"]),
            ends=tuple(float(v) for v in obj["ends"]),
        )


def sliding_confidence(
    frames: list[FrameDetections],
    model: ClassifierModel,
    c: TableCenter | None,
    params: PipelineParams,
    boost_ctx=None,
    frame_features: dict[int, np.ndarray] | None = None,
) -> list[tuple[float, float]]:
    """Window confidences over the stream, sorted by center time."""
    n = len(frames)
    if n < 2:
        raise SegmenterError(f"stream of {n} frames is shorter than one window")
    half, t_steps = window_steps(params, infer_fps(frames))
    skip = params.frameskip
    span = (t_steps - 1) * skip
    if n < span + 1:
        raise SegmenterError(
            f"stream of {n} frames is shorter than one {span + 1}-frame window"
        )

    provider = FrameFeatureProvider(frames, c, params, boost_ctx, frame_features)
    grid = list(range(0, n, skip))
    feats = np.stack([provider.feature(i) for i in grid])

    out: list[tuple[float, float]] = []
    for w_start in range(0, len(grid) - t_steps + 1):
        window = feats[w_start : w_start + t_steps]
        center_frame = grid[w_start + half]
        out.append((frames[center_frame].t, predict(model, window)))
    return out


def segment(
    confidences: list[tuple[float, float]],
    threshold: float,
    min_rally_s: float = 0.0,
) -> RallySegmentation:
    """Maximal runs of p >= threshold, minus runs shorter than min_rally_s."""
    intervals: list[tuple[float, float]] = []
    run_start: float | None = None
    run_last: float | None = None
    for t, p in confidences:
        if p >= threshold:
            if run_start is None:
                run_start = t
            run_last = t
        else:
            if run_start is not None:
                intervals.append((run_start, run_last))
            run_start = None
    if run_start is not None:
        intervals.append((run_start, run_last))

    kept = tuple((s, e) for s, e in intervals if e - s >= min_rally_s)
    return RallySegmentation(
        confidences=tuple(confidences),
        intervals=kept,
        serves=tuple(s for s, _ in kept),
        ends=tuple(e for _, e in kept),
    )

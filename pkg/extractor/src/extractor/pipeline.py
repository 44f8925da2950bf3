"""Video to canonical detection-stream files.

Walks the video at a configurable frame stride, runs the selected backend
per processed frame, and writes:

  * detection NDJSON in the rallyseg schema, one line per processed frame
    (the first line additionally records the re-id dimension)
  * a table mask JSON (RLE) from a reference frame, omitted with a warning
    when the backend finds no table
  * optionally, a whole-frame feature NDJSON for the frame-level baseline
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass

import cv2
import numpy as np

from .backends import Backend, ExtractorError, make_backend


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def encode_rle(bitmap: np.ndarray) -> list[int]:
    flat = np.asarray(bitmap, dtype=np.int64).ravel()
    runs: list[int] = []
    value = 0
    count = 0
    for v in flat:
        if v == value:
            count += 1
        else:
            runs.append(count)
            value ^= 1
            count = 1
    runs.append(count)
    return runs


@dataclass(frozen=True)
class ExtractOptions:
    stride: int = 1
    reid_dim: int = 64
    backend: str = "classical"
    mask_frame: int = 0
    video_id: str | None = None
    max_frames: int | None = None


@dataclass(frozen=True)
class ExtractResult:
    n_frames: int
    n_detections: int
    reid_dim: int
    fps: float
    mask_written: bool


def extract(
    video_path: str,
    detections_out: str,
    mask_out: str | None = None,
    frame_features_out: str | None = None,
    options: ExtractOptions = ExtractOptions(),
    backend: Backend | None = None,
) -> ExtractResult:
    if options.stride < 1:
        raise ExtractorError(f"stride must be >= 1, got {options.stride}")
    if backend is None:
        backend = make_backend(options.backend, options.reid_dim)

    cap = cv2.VideoCapture(str(video_path))
    if not cap.isOpened():
        raise ExtractorError(f"cannot open video {video_path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or 0.0
    if fps <= 0:
        fps = 25.0
    video_id = options.video_id or str(video_path).rsplit("/", 1)[-1]

    n_lines = 0
    n_det = 0
    mask_written = False
    feature_fh = open(frame_features_out, "w", encoding="utf-8") if frame_features_out else None
    try:
        with open(detections_out, "w", encoding="utf-8") as out_fh:
            frame_idx = 0
            while True:
                ret, frame = cap.read()
                if not ret:
                    break
                if frame_idx % options.stride == 0:
                    detections = []
                    for bbox, prob in backend.detect_persons(frame):
                        emb = backend.embed(frame, bbox)
                        detections.append(
                            {
                                "bbox": [float(v) for v in bbox],
                                "person_prob": prob,
                                "class": "person",
                                "reid": [float(v) for v in emb],
                            }
                        )
                    obj = {
                        "video_id": video_id,
                        "frame": frame_idx,
                        "t": frame_idx / fps,
                        "detections": detections,
                    }
                    if n_lines == 0:
                        obj["reid_dim"] = backend.reid_dim
                    out_fh.write(dumps_canonical(obj))
                    out_fh.write("\n")
                    n_lines += 1
                    n_det += len(detections)

                    if feature_fh is not None:
                        feature_fh.write(
                            dumps_canonical(
                                {
                                    "frame": frame_idx,
                                    "feature": [float(v) for v in backend.frame_feature(frame)],
                                }
                            )
                        )
                        feature_fh.write("\n")

                if frame_idx == options.mask_frame and mask_out is not None:
                    bitmap = backend.table_mask(frame)
                    if bitmap is None:
                        print(
                            f"warning: no table mask found in frame {frame_idx}; "
                            f"mask file omitted",
                            file=sys.stderr,
                        )
                    else:
                        height, width = bitmap.shape
                        with open(mask_out, "w", encoding="utf-8") as mask_fh:
                            mask_fh.write(
                                dumps_canonical(
                                    {
                                        "video_id": video_id,
                                        "width": int(width),
                                        "height": int(height),
                                        "rle": encode_rle(bitmap),
                                        "frame": frame_idx,
                                    }
                                )
                            )
                            mask_fh.write("\n")
                        mask_written = True

                frame_idx += 1
                if options.max_frames is not None and frame_idx >= options.max_frames:
                    break
    finally:
        if feature_fh is not None:
            feature_fh.close()
        cap.release()

    return ExtractResult(
        n_frames=n_lines,
        n_detections=n_det,
        reid_dim=backend.reid_dim,
        fps=fps,
        mask_written=mask_written,
    )

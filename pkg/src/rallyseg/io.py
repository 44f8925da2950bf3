"""Readers and writers for the canonical on-disk formats.

Formats:
  * detection stream  NDJSON, one frame object per line
  * annotations       JSON {"video_id", "rallies": [{"start_s", "end_s"}]}
  * mask              JSON {"video_id", "width", "height", "rle": [...]}
                      runs alternate 0/1 starting with 0, row-major
  * models            JSON envelope {"version": "rallyseg-model-v1",
                      "kind": ..., "payload": {...}}
  * truth labels      JSON {"video_id", "players_by_frame": [...]}

All writers emit canonical JSON (sorted keys, fixed separators) so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import IngestError
from .model import (
    BBox,
    Detection,
    FrameDetections,
    RallyAnnotation,
    validate_stream,
)

MODEL_VERSION = "rallyseg-model-v1"


def dumps_canonical(obj: Any) -> str:
    """JSON with deterministic key order; floats round-trip exactly."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _float_list(x) -> list[float]:
    return [float(v) for v in x]


# ---------------------------------------------------------------------------
# detection streams


def frame_to_obj(frame: FrameDetections) -> dict:
    return {
        "video_id": frame.video_id,
        "frame": frame.frame_index,
        "t": frame.t,
        "detections": [
            {
                "bbox": [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
                "person_prob": d.person_prob,
                "class": d.class_label,
                "reid": list(d.reid),
            }
            for d in frame.detections
        ],
    }


def frame_from_obj(obj: dict) -> FrameDetections:
    dets = []
    for dobj in obj["detections"]:
        x, y, w, h = dobj["bbox"]
        dets.append(
            Detection(
                bbox=BBox(float(x), float(y), float(w), float(h)),
                person_prob=float(dobj["person_prob"]),
                reid=tuple(float(v) for v in dobj["reid"]),
                class_label=str(dobj.get("class", "person")),
            )
        )
    return FrameDetections(
        video_id=str(obj["video_id"]),
        frame_index=int(obj["frame"]),
        t=float(obj["t"]),
        detections=tuple(dets),
    )


def write_detections(frames, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(dumps_canonical(frame_to_obj(frame)))
            fh.write("\n")


def read_detections(path) -> list[FrameDetections]:
    """Parse and validate a detection stream; empty files yield empty streams."""
    frames: list[FrameDetections] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                frames.append(frame_from_obj(obj))
            except (ValueError, KeyError, TypeError) as exc:
                raise IngestError(f"{path}: malformed frame on line {lineno}: {exc}") from exc

    report = validate_stream(frames)
    if not report.ok:
        raise IngestError(
            f"{path}: invalid stream at frame {report.frame_index}: {report.violation}"
        )
    return frames


# ---------------------------------------------------------------------------
# annotations


def write_annotations(video_id: str, ann: RallyAnnotation, path) -> None:
    obj = {
        "video_id": video_id,
        "rallies": [{"start_s": s, "end_s": e} for s, e in ann.intervals],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")


def read_annotations(path) -> RallyAnnotation:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
            intervals = [
                (float(r["start_s"]), float(r["end_s"])) for r in obj["rallies"]
            ]
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestError(f"{path}: malformed annotation file: {exc}") from exc
    ann = RallyAnnotation(tuple(sorted(intervals)))
    ann.validate()
    return ann


# ---------------------------------------------------------------------------
# masks


@dataclass(frozen=True)
class Mask:
    """Binary occupancy mask: coordinates of the weight-1 pixels."""

    width: int
    height: int
    xs: np.ndarray
    ys: np.ndarray
    frame: int | None = None

    @property
    def n_pixels(self) -> int:
        return int(self.xs.size)


def read_mask(path) -> Mask:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
            width = int(obj["width"])
            height = int(obj["height"])
            rle = [int(r) for r in obj["rle"]]
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestError(f"{path}: malformed mask file: {exc}") from exc

    total = sum(rle)
    if total != width * height:
        raise IngestError(
            f"{path}: RLE covers {total} pixels, expected {width}x{height}={width * height}"
        )
    if any(r < 0 for r in rle):
        raise IngestError(f"{path}: negative run length")

    idx: list[int] = []
    pos = 0
    value = 0
    for run in rle:
        if value == 1:
            idx.extend(range(pos, pos + run))
        pos += run
        value ^= 1
    idx_arr = np.asarray(idx, dtype=np.int64)
    frame = obj.get("frame")
    return Mask(
        width=width,
        height=height,
        xs=idx_arr % width,
        ys=idx_arr // width,
        frame=None if frame is None else int(frame),
    )


def encode_rle(bitmap: np.ndarray) -> list[int]:
    """Row-major RLE of a binary HxW array; runs alternate 0/1 starting at 0."""
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


def write_mask(video_id: str, bitmap: np.ndarray, path, frame: int | None = None) -> None:
    height, width = bitmap.shape
    obj = {
        "video_id": video_id,
        "width": int(width),
        "height": int(height),
        "rle": encode_rle(bitmap),
    }
    if frame is not None:
        obj["frame"] = int(frame)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")


# ---------------------------------------------------------------------------
# truth labels (synthetic corpora)


def write_truth(video_id: str, players_by_frame: dict[int, tuple[int, ...]], path) -> None:
    obj = {
        "video_id": video_id,
        "players_by_frame": [
            {"frame": f, "players": list(players)}
            for f, players in sorted(players_by_frame.items())
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")


def read_truth(path) -> dict[int, tuple[int, ...]]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
            return {
                int(e["frame"]): tuple(int(p) for p in e["players"])
                for e in obj["players_by_frame"]
            }
        except (ValueError, KeyError, TypeError) as exc:
            raise IngestError(f"{path}: malformed truth file: {exc}") from exc


# ---------------------------------------------------------------------------
# model files


def write_model(kind: str, payload: dict, path) -> None:
    obj = {"version": MODEL_VERSION, "kind": kind, "payload": payload}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(obj))
        fh.write("\n")


def read_model(path, expect_kind: str | None = None) -> tuple[str, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except ValueError as exc:
            raise IngestError(f"{path}: malformed model file: {exc}") from exc
    version = obj.get("version")
    if version != MODEL_VERSION:
        raise IngestError(f"{path}: unsupported model version {version!r}")
    kind = obj.get("kind")
    if expect_kind is not None and kind != expect_kind:
        raise IngestError(f"{path}: expected model kind {expect_kind!r}, found {kind!r}")
    return kind, obj["payload"]

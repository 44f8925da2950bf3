"""Windowed training-sample extraction around rally boundaries.

Positive samples are windows centered on rally starts, negatives come from
rally ends plus random centers drawn from non-rally spans, at neg_ratio
negatives per positive. Each window covers +-window_half_s seconds,
subsampled every `frameskip` frames, giving T = 2*floor(half_s*fps/skip)+1
timesteps of a fixed per-frame feature vector.

Per-frame feature layout (player-level mode), one block per retrieved
player slot ordered left-to-right by box center x:

    [ reid (d_reid) | cx/W  cy/H  w/W  h/H | person_prob | presence ]

Missing slots are zero-filled with presence 0, so D = 2 * (d_reid + 6).
A frame-level mode accepts externally supplied whole-frame vectors behind
the same WindowSample shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import IngestError, SamplerError
from .io import dumps_canonical
from .model import (
    FrameDetections,
    PipelineParams,
    RallyAnnotation,
    TableCenter,
    stream_reid_dim,
)
from .scoring import ScoredCandidate, top2


@dataclass(frozen=True)
class WindowSample:
    features: np.ndarray  # (T, D)
    label: int
    video_id: str
    center_t: float
    kind: str  # start | end | random_neg | augmented

    def __eq__(self, other) -> bool:
        if not isinstance(other, WindowSample):
            return NotImplemented
        return (
            self.label == other.label
            and self.video_id == other.video_id
            and self.center_t == other.center_t
            and self.kind == other.kind
            and np.array_equal(self.features, other.features)
        )


def feature_dim(d_reid: int) -> int:
    return 2 * (d_reid + 6)


def per_frame_feature(
    frame: FrameDetections,
    retrieval: list[ScoredCandidate],
    d_reid: int,
    image_w: float,
    image_h: float,
    normalize_reid: bool = True,
) -> np.ndarray:
    """Concatenate the two retrieved detections' blocks, left player first.

    Swapping the retrieval order does not change the output: slots are
    re-sorted by box center x (ties toward the lower detection index).
    """
    block = d_reid + 6
    out = np.zeros(2 * block)
    picked = []
    for cand in retrieval[:2]:
        det = frame.detections[cand.detection_index]
        cx, cy = det.bbox.center()
        picked.append((cx, cand.detection_index, det))
    picked.sort(key=lambda item: (item[0], item[1]))

    for slot, (cx, _, det) in enumerate(picked):
        reid = np.asarray(det.reid, dtype=float)
        if reid.shape[0] != d_reid:
            raise SamplerError(
                f"detection reid dimension {reid.shape[0]} != expected {d_reid}"
            )
        if normalize_reid:
            norm = np.linalg.norm(reid)
            if norm > 0:
                reid = reid / norm
        cy = det.bbox.center()[1]
        base = slot * block
        out[base : base + d_reid] = reid
        out[base + d_reid : base + d_reid + 4] = (
            cx / image_w,
            cy / image_h,
            det.bbox.w / image_w,
            det.bbox.h / image_h,
        )
        out[base + d_reid + 4] = det.person_prob
        out[base + d_reid + 5] = 1.0
    return out


def infer_fps(frames: list[FrameDetections]) -> float:
    if len(frames) < 2:
        raise SamplerError("need at least 2 frames to infer fps")
    span = frames[-1].t - frames[0].t
    if span <= 0:
        raise SamplerError("zero time span: cannot infer fps")
    return (len(frames) - 1) / span


def window_steps(params: PipelineParams, fps: float) -> tuple[int, int]:
    """(half_steps, T) for the corpus fps."""
    half = int(np.floor(params.window_half_s * fps / params.frameskip))
    return half, 2 * half + 1


class FrameFeatureProvider:
    """Caches per-frame feature vectors for one stream."""

    def __init__(
        self,
        frames: list[FrameDetections],
        c: TableCenter | None,
        params: PipelineParams,
        boost_ctx=None,
        frame_features: dict[int, np.ndarray] | None = None,
        d_reid: int | None = None,
    ):
        self.frames = frames
        self.c = c
        self.params = params
        self.boost_ctx = boost_ctx
        self.frame_features = frame_features
        self._cache: dict[int, np.ndarray] = {}
        if frame_features is None:
            if c is None:
                raise SamplerError("player-level features require a table center")
            if d_reid is None:
                d_reid = stream_reid_dim(frames) or 0
            self.d_reid = d_reid

    def feature(self, idx: int) -> np.ndarray:
        got = self._cache.get(idx)
        if got is not None:
            return got
        frame = self.frames[idx]
        if self.frame_features is not None:
            vec = self.frame_features.get(frame.frame_index)
            if vec is None:
                raise SamplerError(f"no frame-level feature for frame {frame.frame_index}")
            vec = np.asarray(vec, dtype=float)
        else:
            retrieval = top2(frame, self.c, self.params, self.boost_ctx)
            vec = per_frame_feature(
                frame,
                retrieval,
                self.d_reid,
                self.c.image_w,
                self.c.image_h,
                self.params.normalize_reid,
            )
        self._cache[idx] = vec
        return vec


def _window_matrix(provider: FrameFeatureProvider, center_idx: int, half: int, skip: int) -> np.ndarray:
    n = len(provider.frames)
    idxs = [center_idx + (j - half) * skip for j in range(2 * half + 1)]
    if idxs[0] < 0 or idxs[-1] >= n:
        t = provider.frames[center_idx].t
        raise SamplerError(f"window centered at t={t:.3f}s extends outside the stream")
    return np.stack([provider.feature(i) for i in idxs])


def _nearest_index(times: np.ndarray, t: float) -> int:
    pos = int(np.searchsorted(times, t))
    if pos <= 0:
        return 0
    if pos >= len(times):
        return len(times) - 1
    return pos if times[pos] - t < t - times[pos - 1] else pos - 1


def extract_samples(
    frames: list[FrameDetections],
    annotations: RallyAnnotation,
    c: TableCenter | None,
    params: PipelineParams,
    seed: int = 0,
    boost_ctx=None,
    frame_features: dict[int, np.ndarray] | None = None,
) -> list[WindowSample]:
    """Labeled window samples: rally-start positives, rally-end negatives,
    plus random non-rally negatives up to neg_ratio * positives.

    Random negative centers are distinct frames whose windows fit in the
    stream and do not overlap any rally; too few candidates is an error.
    Deterministic for a given seed.
    """
    annotations.validate()
    if not annotations.intervals:
        return []

    fps = infer_fps(frames)
    half, _ = window_steps(params, fps)
    skip = params.frameskip
    provider = FrameFeatureProvider(frames, c, params, boost_ctx, frame_features)
    times = np.asarray([f.t for f in frames])
    video_id = frames[0].video_id
    rng = np.random.default_rng(seed)

    samples: list[WindowSample] = []
    for start_s, end_s in annotations.intervals:
        for center_t, label, kind in ((start_s, 1, "start"), (end_s, 0, "end")):
            idx = _nearest_index(times, center_t)
            feats = _window_matrix(provider, idx, half, skip)
            samples.append(WindowSample(feats, label, video_id, float(times[idx]), kind))

    n_pos = sum(1 for s in samples if s.label == 1)
    n_end = len(samples) - n_pos
    need = params.neg_ratio * n_pos - n_end

    w = params.window_half_s
    span = half * skip
    candidates = []
    for i in range(span, len(frames) - span):
        t = float(times[i])
        if not any(t - w < e and t + w > s for s, e in annotations.intervals):
            candidates.append(i)
    if need > 0:
        if len(candidates) < need:
            raise SamplerError(
                f"need {need} random negative windows but only "
                f"{len(candidates)} non-rally candidate centers exist"
            )
        chosen = sorted(rng.choice(len(candidates), size=need, replace=False).tolist())
        for pos in chosen:
            idx = candidates[pos]
            feats = _window_matrix(provider, idx, half, skip)
            samples.append(
                WindowSample(feats, 0, video_id, float(times[idx]), "random_neg")
            )
    return samples


def augment_feature_space(
    samples: list[WindowSample],
    n_copies: int,
    sigma_style: float,
    seed: int = 0,
) -> list[WindowSample]:
    """Appearance-space stand-in for style-transfer augmentation.

    Each positive sample gains n_copies copies whose re-id blocks are passed
    through one random affine map (scalar gain, per-dimension offset) held
    constant across all timesteps of the copy. Assumes the player-level
    feature layout.
    """
    if n_copies < 0:
        raise SamplerError(f"n_copies must be >= 0, got {n_copies}")
    rng = np.random.default_rng(seed)
    out = list(samples)
    for sample in samples:
        if sample.label != 1:
            continue
        block = sample.features.shape[1] // 2
        d_reid = block - 6
        if d_reid <= 0:
            raise SamplerError(
                "samples do not use the player-level feature layout; "
                "appearance augmentation needs its re-id blocks"
            )
        for _ in range(n_copies):
            gain = 1.0 + sigma_style * rng.standard_normal()
            offset = sigma_style * rng.standard_normal(d_reid)
            feats = sample.features.copy()
            for slot in range(2):
                sl = slice(slot * block, slot * block + d_reid)
                feats[:, sl] = gain * feats[:, sl] + offset
            out.append(
                WindowSample(feats, sample.label, sample.video_id, sample.center_t, "augmented")
            )
    return out


# ---------------------------------------------------------------------------
# samples file (NDJSON, one window per line, features row-major)


def write_samples(samples: list[WindowSample], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            obj = {
                "video_id": s.video_id,
                "center_t": s.center_t,
                "kind": s.kind,
                "label": s.label,
                "shape": list(s.features.shape),
                "features": [float(v) for v in s.features.ravel()],
            }
            fh.write(dumps_canonical(obj))
            fh.write("\n")


def read_samples(path) -> list[WindowSample]:
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                t, d = obj["shape"]
                feats = np.asarray(obj["features"], dtype=float).reshape(t, d)
                samples.append(
                    WindowSample(
                        feats,
                        int(obj["label"]),
                        str(obj["video_id"]),
                        float(obj["center_t"]),
                        str(obj["kind"]),
                    )
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise IngestError(f"{path}: malformed sample on line {lineno}: {exc}") from exc
    return samples

"""Seeded synthetic detection corpora for tests, calibration and acceptance.

The generator emits a desk-scale stand-in for a real match: during rallies
two "players" appear near configurable table-side anchors with re-id
features drawn around per-player centers; every frame additionally carries
0..max_outliers outlier detections (audience, coaches) placed farther from
the table center, with person probabilities overlapping the players' range
so that the plain heuristic score misranks some frames. Detections emitted
in non-rally frames are displaced along one designated re-id dimension, so
window-level statistics separate rally from non-rally spans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IngestError
from .model import BBox, Detection, FrameDetections, RallyAnnotation, TableCenter


@dataclass(frozen=True)
class SyntheticSpec:
    n_frames: int
    fps: float
    d_reid: int
    player_centers: tuple[tuple[float, ...], tuple[float, ...]]
    outlier_centers: tuple[tuple[float, ...], ...]
    player_spatial_anchor: tuple[tuple[float, float], tuple[float, float]]
    outlier_margin: float
    rally_intervals: RallyAnnotation
    noise_sigma: float
    seed: int
    image_w: int = 1280
    image_h: int = 720
    video_id: str = "synthetic"
    rally_shift: float = 1.0
    rally_shift_dim: int = -1
    max_outliers: int = 3
    player_jitter_px: float = 12.0
    outlier_dist_ratio: tuple[float, float] = (0.25, 0.45)

    def validate(self) -> None:
        if self.n_frames <= 0 or self.fps <= 0 or self.d_reid <= 0:
            raise IngestError("n_frames, fps and d_reid must be positive")
        if self.noise_sigma < 0 or self.outlier_margin <= 0:
            raise IngestError("noise_sigma must be >= 0 and outlier_margin > 0")
        for ax, ay in self.player_spatial_anchor:
            if not (0 <= ax <= self.image_w and 0 <= ay <= self.image_h):
                raise IngestError(f"player anchor ({ax}, {ay}) outside image bounds")
        p0 = np.asarray(self.player_centers[0], dtype=float)
        p1 = np.asarray(self.player_centers[1], dtype=float)
        for oc in self.outlier_centers:
            o = np.asarray(oc, dtype=float)
            d = min(np.linalg.norm(o - p0), np.linalg.norm(o - p1))
            if d < self.outlier_margin:
                raise IngestError(
                    f"outlier center at distance {d:.3f} from a player center, "
                    f"below margin {self.outlier_margin}"
                )

    @property
    def table_center(self) -> TableCenter:
        (ax0, ay0), (ax1, ay1) = self.player_spatial_anchor
        return TableCenter(
            cx=(ax0 + ax1) / 2.0,
            cy=(ay0 + ay1) / 2.0,
            image_w=float(self.image_w),
            image_h=float(self.image_h),
        )


def make_default_spec(
    n_rallies: int = 10,
    rally_len_s: float = 8.0,
    gap_s: float = 12.0,
    fps: float = 25.0,
    d_reid: int = 8,
    noise_sigma: float = 0.0,
    seed: int = 0,
    image_w: int = 1280,
    image_h: int = 720,
    n_outlier_centers: int = 2,
    outlier_dist_ratio: tuple[float, float] = (0.25, 0.45),
    rally_shift: float = 1.0,
    video_id: str = "synthetic",
) -> SyntheticSpec:
    """Canned corpus geometry: players on orthogonal re-id axes, outliers on
    further axes, all centers zero on the shift dimension."""
    if d_reid < 2 + n_outlier_centers + 1:
        raise IngestError(
            f"d_reid={d_reid} too small for 2 player + {n_outlier_centers} outlier axes + shift dim"
        )
    axis = lambda i, scale: tuple(scale if j == i else 0.0 for j in range(d_reid))
    intervals = []
    t = gap_s
    for _ in range(n_rallies):
        intervals.append((t, t + rally_len_s))
        t += rally_len_s + gap_s
    n_frames = int(round(t * fps))
    cx, cy = image_w / 2.0, image_h / 2.0
    return SyntheticSpec(
        n_frames=n_frames,
        fps=fps,
        d_reid=d_reid,
        player_centers=(axis(0, 3.0), axis(1, 3.0)),
        outlier_centers=tuple(axis(2 + i, 3.5) for i in range(n_outlier_centers)),
        player_spatial_anchor=((cx - 140.0, cy), (cx + 140.0, cy)),
        outlier_margin=4.0,
        rally_intervals=RallyAnnotation(tuple(intervals)),
        noise_sigma=noise_sigma,
        seed=seed,
        image_w=image_w,
        image_h=image_h,
        video_id=video_id,
        rally_shift=rally_shift,
        outlier_dist_ratio=outlier_dist_ratio,
    )


def planted_outlier_corpus(
    seed: int,
    n_frames: int = 100,
    d_reid: int = 8,
    sigma: float = 0.2,
    out_lo: float = 0.05,
    out_hi: float = 0.12,
    n_outliers: int = 3,
) -> tuple[list[FrameDetections], dict[int, tuple[int, ...]], TableCenter]:
    """All-rally corpus whose outliers overlap the players' heuristic scores.

    Outlier boxes sit in a table-distance band comparable to the players'
    and their person probabilities reach into the player band, so the plain
    heuristic misranks a sizable fraction of frames; their re-id features
    stay in a separate cluster, which is what boosting exploits. Truth marks
    detections 0 and 1 (the players) in every frame.
    """
    rng = np.random.default_rng(seed)
    center = TableCenter(640.0, 360.0, 1280.0, 720.0)
    c_norm = math.hypot(center.cx, center.cy)

    def axis(i: int, scale: float) -> np.ndarray:
        v = np.zeros(d_reid)
        v[i] = scale
        return v

    p_centers = [axis(0, 3.0), axis(1, 3.0)]
    o_center = axis(2, 3.5)
    anchors = [(center.cx - 80.0, center.cy), (center.cx + 80.0, center.cy)]

    frames: list[FrameDetections] = []
    truth: dict[int, tuple[int, ...]] = {}
    for i in range(n_frames):
        dets = []
        for (ax, ay), pc in zip(anchors, p_centers):
            jx, jy = rng.uniform(-10.0, 10.0, 2)
            reid = pc + sigma * rng.standard_normal(d_reid)
            dets.append(
                Detection(
                    BBox(ax + jx - 27.0, ay + jy - 65.0, 55.0, 130.0),
                    float(rng.uniform(0.8, 1.0)),
                    tuple(float(v) for v in reid),
                )
            )
        for _ in range(n_outliers):
            r = rng.uniform(out_lo, out_hi) * c_norm
            theta = rng.uniform(0.0, 2.0 * math.pi)
            ox = center.cx + r * math.cos(theta)
            oy = center.cy + r * math.sin(theta)
            reid = o_center + sigma * rng.standard_normal(d_reid)
            dets.append(
                Detection(
                    BBox(max(ox - 25.0, 0.0), max(oy - 60.0, 0.0), 50.0, 120.0),
                    float(rng.uniform(0.4, 0.9)),
                    tuple(float(v) for v in reid),
                )
            )
        frames.append(FrameDetections("planted", i, i / 25.0, tuple(dets)))
        truth[i] = (0, 1)
    return frames, truth, center


def spec_to_obj(spec: SyntheticSpec) -> dict:
    return {
        "n_frames": spec.n_frames,
        "fps": spec.fps,
        "d_reid": spec.d_reid,
        "player_centers": [list(c) for c in spec.player_centers],
        "outlier_centers": [list(c) for c in spec.outlier_centers],
        "player_spatial_anchor": [list(a) for a in spec.player_spatial_anchor],
        "outlier_margin": spec.outlier_margin,
        "rally_intervals": [{"start_s": s, "end_s": e} for s, e in spec.rally_intervals.intervals],
        "noise_sigma": spec.noise_sigma,
        "seed": spec.seed,
        "image_w": spec.image_w,
        "image_h": spec.image_h,
        "video_id": spec.video_id,
        "rally_shift": spec.rally_shift,
        "rally_shift_dim": spec.rally_shift_dim,
        "max_outliers": spec.max_outliers,
        "player_jitter_px": spec.player_jitter_px,
        "outlier_dist_ratio": list(spec.outlier_dist_ratio),
    }


def spec_from_obj(obj: dict) -> SyntheticSpec:
    try:
        intervals = tuple(
            (float(r["start_s"]), float(r["end_s"])) for r in obj["rally_intervals"]
        )
        return SyntheticSpec(
            n_frames=int(obj["n_frames"]),
            fps=float(obj["fps"]),
            d_reid=int(obj["d_reid"]),
            player_centers=(
                tuple(float(v) for v in obj["player_centers"][0]),
                tuple(float(v) for v in obj["player_centers"][1]),
            ),
            outlier_centers=tuple(
                tuple(float(v) for v in c) for c in obj["outlier_centers"]
            ),
            player_spatial_anchor=(
                tuple(float(v) for v in obj["player_spatial_anchor"][0]),
                tuple(float(v) for v in obj["player_spatial_anchor"][1]),
            ),
            outlier_margin=float(obj["outlier_margin"]),
            rally_intervals=RallyAnnotation(intervals),
            noise_sigma=float(obj["noise_sigma"]),
            seed=int(obj["seed"]),
            image_w=int(obj.get("image_w", 1280)),
            image_h=int(obj.get("image_h", 720)),
            video_id=str(obj.get("video_id", "synthetic")),
            rally_shift=float(obj.get("rally_shift", 1.0)),
            rally_shift_dim=int(obj.get("rally_shift_dim", -1)),
            max_outliers=int(obj.get("max_outliers", 3)),
            player_jitter_px=float(obj.get("player_jitter_px", 12.0)),
            outlier_dist_ratio=tuple(obj.get("outlier_dist_ratio", (0.25, 0.45))),
        )
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise IngestError(f"malformed synthetic spec: {exc}") from exc


def _clip_box(cx: float, cy: float, w: float, h: float, img_w: float, img_h: float) -> BBox:
    x = min(max(cx - w / 2.0, 0.0), max(img_w - w, 0.0))
    y = min(max(cy - h / 2.0, 0.0), max(img_h - h, 0.0))
    return BBox(x, y, w, h)


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[list[FrameDetections], RallyAnnotation, dict[int, tuple[int, ...]]]:
    """Generate (frames, annotations, per-frame truth player indices).

    Deterministic for a given spec: all randomness flows from one PCG64
    stream seeded with spec.seed.
    """
    spec.validate()
    spec.rally_intervals.validate()
    rng = np.random.default_rng(spec.seed)

    d = spec.d_reid
    shift_dim = spec.rally_shift_dim % d
    p_centers = [np.asarray(c, dtype=float) for c in spec.player_centers]
    o_centers = [np.asarray(c, dtype=float) for c in spec.outlier_centers]
    center = spec.table_center
    c_norm = math.hypot(center.cx, center.cy)

    frames: list[FrameDetections] = []
    truth: dict[int, tuple[int, ...]] = {}

    for i in range(spec.n_frames):
        t = i / spec.fps
        in_rally = spec.rally_intervals.contains(t)
        detections: list[Detection] = []
        player_dist = 0.0

        if in_rally:
            for (ax, ay), pc in zip(spec.player_spatial_anchor, p_centers):
                jx, jy = rng.uniform(-spec.player_jitter_px, spec.player_jitter_px, size=2)
                w = 55.0 + rng.uniform(-5.0, 5.0)
                h = 130.0 + rng.uniform(-10.0, 10.0)
                bbox = _clip_box(ax + jx, ay + jy, w, h, spec.image_w, spec.image_h)
                bx, by = bbox.center()
                player_dist = max(player_dist, math.hypot(bx - center.cx, by - center.cy))
                reid = pc + spec.noise_sigma * rng.standard_normal(d)
                detections.append(
                    Detection(
                        bbox=bbox,
                        person_prob=float(rng.uniform(0.8, 1.0)),
                        reid=tuple(float(v) for v in reid),
                    )
                )

        n_out = int(rng.integers(0, spec.max_outliers + 1)) if o_centers else 0
        for _ in range(n_out):
            oc = o_centers[int(rng.integers(0, len(o_centers)))]
            lo, hi = spec.outlier_dist_ratio
            # keep outliers strictly farther from the table center than both players
            min_r = max(lo * c_norm, player_dist + 10.0)
            max_r = max(hi * c_norm, min_r + 20.0)
            for _attempt in range(30):
                r = rng.uniform(min_r, max_r)
                theta = rng.uniform(0.0, 2.0 * math.pi)
                ox = center.cx + r * math.cos(theta)
                oy = center.cy + r * math.sin(theta)
                if 0 <= ox < spec.image_w and 0 <= oy < spec.image_h:
                    break
            w = rng.uniform(40.0, 70.0)
            h = rng.uniform(90.0, 150.0)
            reid = oc + spec.noise_sigma * rng.standard_normal(d)
            if not in_rally:
                reid = reid.copy()
                reid[shift_dim] -= spec.rally_shift
            detections.append(
                Detection(
                    bbox=_clip_box(ox, oy, w, h, spec.image_w, spec.image_h),
                    person_prob=float(rng.uniform(0.4, 0.9)),
                    reid=tuple(float(v) for v in reid),
                )
            )

        frames.append(
            FrameDetections(
                video_id=spec.video_id,
                frame_index=i,
                t=t,
                detections=tuple(detections),
            )
        )
        truth[i] = (0, 1) if in_rally else ()

    return frames, spec.rally_intervals, truth


def table_bitmap(spec: SyntheticSpec, half_w: int = 120, half_h: int = 60) -> np.ndarray:
    """Rectangle mask whose centroid sits exactly on the spec's table center."""
    c = spec.table_center
    cx, cy = int(round(c.cx)), int(round(c.cy))
    bitmap = np.zeros((spec.image_h, spec.image_w), dtype=np.int64)
    x0, x1 = max(cx - half_w, 0), min(cx + half_w + 1, spec.image_w)
    y0, y1 = max(cy - half_h, 0), min(cy + half_h + 1, spec.image_h)
    bitmap[y0:y1, x0:x1] = 1
    return bitmap

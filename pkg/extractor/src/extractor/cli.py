"""Command-line entry point for the extraction adapter."""

from __future__ import annotations

import argparse
import sys

from .backends import ExtractorError
from .pipeline import ExtractOptions, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rallyseg-extract",
        description="Extract a rallyseg detection stream (and table mask) from a video",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run detection/embedding over a video")
    p.add_argument("--video", required=True)
    p.add_argument("--out", required=True, help="detection NDJSON path")
    p.add_argument("--mask-out", help="table mask JSON path")
    p.add_argument("--frame-features-out", help="whole-frame feature NDJSON path")
    p.add_argument("--stride", type=int, default=1, help="process every Nth frame")
    p.add_argument("--reid-dim", type=int, default=64)
    p.add_argument("--backend", default="classical",
                   help="extraction backend name (classical, torchvision)")
    p.add_argument("--mask-frame", type=int, default=0,
                   help="frame index used for table segmentation")
    p.add_argument("--video-id", help="override the video id recorded in the stream")
    p.add_argument("--max-frames", type=int, default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sample-clip", help="write a synthetic demo clip")
    p.add_argument("--out", required=True)
    p.add_argument("--seconds", type=float, default=10.0)
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--empty", action="store_true", help="no people in the clip")
    p.set_defaults(func=cmd_sample_clip)

    return parser


def cmd_extract(args) -> int:
    options = ExtractOptions(
        stride=args.stride,
        reid_dim=args.reid_dim,
        backend=args.backend,
        mask_frame=args.mask_frame,
        video_id=args.video_id,
        max_frames=args.max_frames,
    )
    result = extract(
        args.video,
        args.out,
        mask_out=args.mask_out,
        frame_features_out=args.frame_features_out,
        options=options,
    )
    print(
        f"wrote {result.n_frames} frames, {result.n_detections} detections, "
        f"reid_dim {result.reid_dim}, fps {result.fps:g}, "
        f"mask {'written' if result.mask_written else 'omitted'}"
    )
    return 0


def cmd_sample_clip(args) -> int:
    from .sample_clip import generate_sample_clip

    n = generate_sample_clip(
        args.out,
        seconds=args.seconds,
        fps=args.fps,
        seed=args.seed,
        with_people=not args.empty,
    )
    print(f"wrote {n} frames to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Subcommands cover the full pipeline: synth, validate, table-center,
retrieve, boost-fit, make-samples, train, segment, eval-retrieval,
eval-samples, eval-temporal, sweep. Every pipeline knob is a flag; a TOML
config file (--config) mirrors the flags, with flags taking precedence.
All randomness flows from --seed, and identical inputs produce
byte-identical output files.

Exit codes: 0 success, 1 domain error (one-line diagnostic on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import aggregation, classifier, evaluation, io, sampler, segmenter, synthetic, table
from .errors import IngestError, RallysegError
from .model import PipelineParams, TableCenter, validate_stream
from .scoring import ScoredCandidate, top2

_PARAM_FIELDS = {f.name: f for f in dataclasses.fields(PipelineParams)}


# ---------------------------------------------------------------------------
# config / params plumbing


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise IngestError(f"cannot read config {path}: {exc}") from exc


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file mirroring the flags")
    parser.add_argument("--seed", type=int, default=None, help="seed for all randomness")


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("pipeline parameters")
    for name, fld in _PARAM_FIELDS.items():
        flag = "--" + name.replace("_", "-")
        if fld.type == "bool" or isinstance(fld.default, bool):
            group.add_argument(flag, dest=name, action=argparse.BooleanOptionalAction, default=None)
        elif isinstance(fld.default, int):
            group.add_argument(flag, dest=name, type=int, default=None)
        elif isinstance(fld.default, float):
            group.add_argument(flag, dest=name, type=float, default=None)
        else:
            group.add_argument(flag, dest=name, type=str, default=None)


def _cfg(config: dict, section: str, name: str, flag_value, default):
    if flag_value is not None:
        return flag_value
    if section in config and name in config[section]:
        return config[section][name]
    return default


def _build_params(args, config: dict) -> PipelineParams:
    values = {}
    section = config.get("params", {})
    for name, fld in _PARAM_FIELDS.items():
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            values[name] = flag_value
        elif name in section:
            values[name] = section[name]
    params = PipelineParams(**values)
    params.validate()
    return params


def _seed(args, config: dict) -> int:
    return int(_cfg(config, "run", "seed", args.seed, 0))


def _parse_pair(text: str, what: str) -> tuple[float, float]:
    parts = text.replace("x", ",").split(",")
    if len(parts) != 2:
        raise IngestError(f"cannot parse {what} from {text!r}")
    return float(parts[0]), float(parts[1])


def _center_from_args(args) -> TableCenter:
    if getattr(args, "mask", None):
        return table.table_center(io.read_mask(args.mask))
    if getattr(args, "center", None):
        if not getattr(args, "image_size", None):
            raise IngestError("--center requires --image-size WxH")
        cx, cy = _parse_pair(args.center, "--center")
        w, h = _parse_pair(args.image_size, "--image-size")
        return TableCenter(cx, cy, w, h)
    raise IngestError("need --mask or --center to locate the table")


def _add_center_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mask", help="table mask JSON (preferred center source)")
    parser.add_argument("--center", help="explicit table center as CX,CY")
    parser.add_argument("--image-size", help="image size WxH, required with --center")


def _write_or_print(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        print(text)


def _load_boost(path: str | None) -> aggregation.BoostContext | None:
    if not path:
        return None
    _, payload = io.read_model(path, expect_kind="boost-context")
    return aggregation.BoostContext.from_payload(payload)


def _load_classifier(path: str) -> classifier.ClassifierModel:
    _, payload = io.read_model(path, expect_kind="classifier")
    return classifier.model_from_payload(payload)


def _read_frame_features(path: str | None) -> dict[int, np.ndarray] | None:
    if not path:
        return None
    feats: dict[int, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                feats[int(obj["frame"])] = np.asarray(obj["feature"], dtype=float)
            except (ValueError, KeyError, TypeError) as exc:
                raise IngestError(f"{path}: malformed feature line {lineno}: {exc}") from exc
    return feats


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args, config) -> int:
    seed = _seed(args, config)
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as fh:
            spec = synthetic.spec_from_obj(json.load(fh))
    else:
        get = lambda name, default: _cfg(config, "synth", name, getattr(args, name), default)
        spec = synthetic.make_default_spec(
            n_rallies=int(get("n_rallies", 10)),
            rally_len_s=float(get("rally_len_s", 8.0)),
            gap_s=float(get("gap_s", 12.0)),
            fps=float(get("fps", 25.0)),
            d_reid=int(get("d_reid", 8)),
            noise_sigma=float(get("noise_sigma", 0.0)),
            seed=seed,
            image_w=int(get("image_w", 1280)),
            image_h=int(get("image_h", 720)),
            rally_shift=float(get("rally_shift", 1.0)),
            video_id=str(get("video_id", "synthetic")),
        )
    frames, annotation, truth = synthetic.generate_synthetic(spec)
    io.write_detections(frames, args.out)
    if args.annotations_out:
        io.write_annotations(spec.video_id, annotation, args.annotations_out)
    if args.truth_out:
        io.write_truth(spec.video_id, truth, args.truth_out)
    if args.mask_out:
        io.write_mask(spec.video_id, synthetic.table_bitmap(spec), args.mask_out, frame=0)
    return 0


def cmd_validate(args, config) -> int:
    frames = []
    with open(args.detections, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                frames.append(io.frame_from_obj(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise IngestError(
                    f"{args.detections}: malformed frame on line {lineno}: {exc}"
                ) from exc
    report = validate_stream(frames)
    obj = {
        "ok": report.ok,
        "n_frames": report.n_frames,
        "n_detections": report.n_detections,
        "violation": report.violation,
        "frame_index": report.frame_index,
    }
    _write_or_print(io.dumps_canonical(obj), getattr(args, "out", None))
    if not report.ok:
        print(
            f"error: invalid stream at frame {report.frame_index}: {report.violation}",
            file=sys.stderr,
        )
        return 1
    return 0


def cmd_table_center(args, config) -> int:
    center = table.table_center(io.read_mask(args.mask))
    print(io.dumps_canonical({"cx": center.cx, "cy": center.cy}))
    return 0


def cmd_retrieve(args, config) -> int:
    params = _build_params(args, config)
    frames = io.read_detections(args.detections)
    center = _center_from_args(args)
    ctx = _load_boost(args.boost)
    with open(args.out, "w", encoding="utf-8") as fh:
        for frame in frames:
            cands = top2(frame, center, params, ctx)
            obj = {
                "video_id": frame.video_id,
                "frame": frame.frame_index,
                "t": frame.t,
                "candidates": [
                    {
                        "detection": c.detection_index,
                        "score_h": c.score_h,
                        "score_boosted": c.score_boosted,
                    }
                    for c in cands
                ],
            }
            fh.write(io.dumps_canonical(obj))
            fh.write("\n")
    return 0


def cmd_boost_fit(args, config) -> int:
    params = _build_params(args, config)
    seed = _seed(args, config)
    frames = io.read_detections(args.detections)
    center = _center_from_args(args)
    buffer, scores = aggregation.build_buffer(frames, center, params.m_frames, params)
    ctx = aggregation.fit_boost(buffer, scores, params, seed)
    io.write_model("boost-context", ctx.to_payload(), args.out)
    return 0


def cmd_make_samples(args, config) -> int:
    params = _build_params(args, config)
    seed = _seed(args, config)
    frames = io.read_detections(args.detections)
    annotation = io.read_annotations(args.annotations)
    frame_features = _read_frame_features(args.frame_features)
    center = None if frame_features is not None else _center_from_args(args)
    ctx = _load_boost(args.boost)
    samples = sampler.extract_samples(
        frames, annotation, center, params, seed, ctx, frame_features
    )
    copies = int(_cfg(config, "make-samples", "augment_copies", args.augment_copies, 0))
    if copies > 0:
        sigma = float(_cfg(config, "make-samples", "sigma_style", args.sigma_style, 0.1))
        samples = sampler.augment_feature_space(samples, copies, sigma, seed)
    sampler.write_samples(samples, args.out)
    return 0


def cmd_train(args, config) -> int:
    seed = _seed(args, config)
    samples = sampler.read_samples(args.samples)
    hidden = _cfg(config, "train", "hidden", args.hidden, "256,64")
    if isinstance(hidden, (list, tuple)):
        h1, h2 = (int(v) for v in hidden)
    else:
        h1, h2 = (int(v) for v in str(hidden).split(","))
    cfg = classifier.TrainConfig(
        lr=float(_cfg(config, "train", "lr", args.lr, 0.1)),
        epochs=int(_cfg(config, "train", "epochs", args.epochs, 500)),
        l2=float(_cfg(config, "train", "l2", args.l2, 1e-4)),
        seed=seed,
        kind=str(_cfg(config, "train", "kind", args.kind, classifier.KIND_POOLED)),
        hidden=(h1, h2),
    )
    model, log = classifier.train(samples, cfg)
    io.write_model("classifier", classifier.model_to_payload(model), args.out)
    if args.log_out:
        lines = ["epoch,loss"] + [f"{epoch},{loss!r}" for epoch, loss in log]
        with open(args.log_out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def cmd_segment(args, config) -> int:
    params = _build_params(args, config)
    frames = io.read_detections(args.detections)
    model = _load_classifier(args.model)
    ctx = _load_boost(args.boost)
    frame_features = _read_frame_features(args.frame_features)
    center = None if frame_features is not None else _center_from_args(args)
    confidences = segmenter.sliding_confidence(
        frames, model, center, params, ctx, frame_features
    )
    seg = segmenter.segment(confidences, params.threshold, params.min_rally_s)
    video_id = frames[0].video_id if frames else ""
    _write_or_print(io.dumps_canonical(seg.to_obj(video_id)), args.out)
    if args.confidences_out:
        lines = ["t,p"] + [f"{t!r},{p!r}" for t, p in confidences]
        with open(args.confidences_out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def _read_retrieved(path: str) -> list[ScoredCandidate]:
    cands: list[ScoredCandidate] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                for c in obj["candidates"]:
                    cands.append(
                        ScoredCandidate(
                            frame_index=int(obj["frame"]),
                            detection_index=int(c["detection"]),
                            score_h=float(c["score_h"]),
                            score_boosted=None
                            if c.get("score_boosted") is None
                            else float(c["score_boosted"]),
                        )
                    )
            except (ValueError, KeyError, TypeError) as exc:
                raise IngestError(f"{path}: malformed retrieval line {lineno}: {exc}") from exc
    return cands


def cmd_eval_retrieval(args, config) -> int:
    cands = _read_retrieved(args.retrieved)
    truth = io.read_truth(args.truth)
    precision = evaluation.retrieval_precision(cands, truth)
    fp = sum(1 for c in cands if c.detection_index not in truth[c.frame_index])
    obj = {"precision": precision, "n_crops": len(cands), "false_positives": fp}
    _write_or_print(io.dumps_canonical(obj), args.out)
    return 0


def cmd_eval_samples(args, config) -> int:
    params = _build_params(args, config)
    samples = sampler.read_samples(args.samples)
    model = _load_classifier(args.model)
    confidences = [classifier.predict(model, s.features) for s in samples]
    labels = [s.label for s in samples]
    precision, recall, f1 = evaluation.prf1(confidences, labels, params.threshold)
    obj = {
        "threshold": params.threshold,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "auroc": evaluation.auroc(confidences, labels),
        "n_pos": sum(1 for v in labels if v == 1),
        "n_neg": sum(1 for v in labels if v != 1),
    }
    _write_or_print(io.dumps_canonical(obj), args.out)
    return 0


def cmd_eval_temporal(args, config) -> int:
    params = _build_params(args, config)
    with open(args.segmentation, "r", encoding="utf-8") as fh:
        seg = segmenter.RallySegmentation.from_obj(json.load(fh))
    annotation = io.read_annotations(args.annotations)
    result = evaluation.temporal_match(seg, annotation, params.tolerance_s)

    def side(counts):
        return {
            "precision": counts.precision,
            "recall": counts.recall,
            "f1": counts.f1,
            "tp": counts.tp,
            "fp": counts.fp,
            "fn": counts.fn,
        }

    obj = {
        "tolerance_s": params.tolerance_s,
        "serve": side(result.serve),
        "end": side(result.end),
    }
    _write_or_print(io.dumps_canonical(obj), args.out)
    return 0


def cmd_sweep(args, config) -> int:
    params = _build_params(args, config)
    frames = io.read_detections(args.detections)
    model = _load_classifier(args.model)
    ctx = _load_boost(args.boost)
    frame_features = _read_frame_features(args.frame_features)
    center = None if frame_features is not None else _center_from_args(args)
    annotation = io.read_annotations(args.annotations)
    thresholds = [float(v) for v in args.thresholds.split(",")]
    rows = evaluation.threshold_sweep(
        frames, model, center, annotation, thresholds, params, ctx, frame_features
    )
    header = (
        "threshold,serve_precision,serve_recall,serve_f1,"
        "end_precision,end_recall,end_f1"
    )
    lines = [header] + [
        f"{r['threshold']!r},{r['serve_precision']!r},{r['serve_recall']!r},"
        f"{r['serve_f1']!r},{r['end_precision']!r},{r['end_recall']!r},{r['end_f1']!r}"
        for r in rows
    ]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rallyseg",
        description="Unsupervised player retrieval and rally segmentation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic detection corpus")
    _add_common(p)
    p.add_argument("--out", required=True, help="detection stream NDJSON")
    p.add_argument("--annotations-out", help="rally annotations JSON")
    p.add_argument("--truth-out", help="per-frame player truth JSON")
    p.add_argument("--mask-out", help="table mask JSON")
    p.add_argument("--spec", help="full SyntheticSpec JSON (overrides canned flags)")
    p.add_argument("--n-rallies", type=int, default=None)
    p.add_argument("--rally-len-s", type=float, default=None)
    p.add_argument("--gap-s", type=float, default=None)
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--d-reid", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--image-w", type=int, default=None)
    p.add_argument("--image-h", type=int, default=None)
    p.add_argument("--rally-shift", type=float, default=None)
    p.add_argument("--video-id", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("validate", help="validate a detection stream")
    _add_common(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("table-center", help="table centroid from a mask")
    _add_common(p)
    p.add_argument("--mask", required=True)
    p.set_defaults(func=cmd_table_center)

    p = sub.add_parser("retrieve", help="per-frame top-2 player candidates")
    _add_common(p)
    _add_param_flags(p)
    _add_center_flags(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--boost", help="boost context JSON for boosted ranking")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("boost-fit", help="fit the score-boosting cluster context")
    _add_common(p)
    _add_param_flags(p)
    _add_center_flags(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_boost_fit)

    p = sub.add_parser("make-samples", help="extract labeled window samples")
    _add_common(p)
    _add_param_flags(p)
    _add_center_flags(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--boost", help="boost context JSON")
    p.add_argument("--frame-features", help="frame-level feature NDJSON (baseline mode)")
    p.add_argument("--augment-copies", type=int, default=None)
    p.add_argument("--sigma-style", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_samples)

    p = sub.add_parser("train", help="train the rally classifier")
    _add_common(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=[classifier.KIND_POOLED, classifier.KIND_RECURRENT], default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--l2", type=float, default=None)
    p.add_argument("--hidden", default=None, help="recurrent hidden sizes, e.g. 256,64")
    p.add_argument("--log-out", help="per-epoch loss CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("segment", help="sliding-window rally segmentation")
    _add_common(p)
    _add_param_flags(p)
    _add_center_flags(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--boost", help="boost context JSON")
    p.add_argument("--frame-features", help="frame-level feature NDJSON (baseline mode)")
    p.add_argument("--out", help="segmentation JSON (stdout if omitted)")
    p.add_argument("--confidences-out", help="CSV of (t, p) for plotting")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("eval-retrieval", help="retrieval precision against truth labels")
    _add_common(p)
    p.add_argument("--retrieved", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_retrieval)

    p = sub.add_parser("eval-samples", help="sample-wise precision/recall/F1/AUROC")
    _add_common(p)
    _add_param_flags(p)
    p.add_argument("--samples", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_samples)

    p = sub.add_parser("eval-temporal", help="tolerance-matched serve/end F1")
    _add_common(p)
    _add_param_flags(p)
    p.add_argument("--segmentation", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_temporal)

    p = sub.add_parser("sweep", help="serve/end F1 across thresholds")
    _add_common(p)
    _add_param_flags(p)
    _add_center_flags(p)
    p.add_argument("--detections", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--boost", help="boost context JSON")
    p.add_argument("--frame-features", help="frame-level feature NDJSON (baseline mode)")
    p.add_argument("--annotations", required=True)
    p.add_argument("--thresholds", required=True, help="comma-separated list")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except RallysegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

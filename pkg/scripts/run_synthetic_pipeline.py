#!/usr/bin/env python3
"""Drive the full pipeline on a synthetic corpus through the CLI.

Writes every intermediate artifact into --out-dir and prints the retrieval,
sample-wise and temporal reports.
"""

import argparse
import json
import pathlib
import sys

from rallyseg.cli import main as cli


def run(args):
    code = cli([str(a) for a in args])
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="out/synthetic")
    parser.add_argument("--seed", type=int, default=11)
    parser.add_argument("--n-rallies", type=int, default=10)
    parser.add_argument("--noise-sigma", type=float, default=0.5)
    parser.add_argument("--threshold", type=float, default=0.5)
    args = parser.parse_args()

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d, m = out / "detections.ndjson", out / "mask.json"

    run(["synth", "--seed", args.seed, "--out", d,
         "--annotations-out", out / "annotations.json",
         "--truth-out", out / "truth.json", "--mask-out", m,
         "--n-rallies", args.n_rallies, "--noise-sigma", args.noise_sigma])
    run(["boost-fit", "--detections", d, "--mask", m,
         "--out", out / "boost.json", "--seed", args.seed + 1])
    run(["retrieve", "--detections", d, "--mask", m, "--boost", out / "boost.json",
         "--out", out / "retrieved.ndjson"])
    run(["eval-retrieval", "--retrieved", out / "retrieved.ndjson",
         "--truth", out / "truth.json", "--out", out / "report_retrieval.json"])
    run(["make-samples", "--detections", d, "--annotations", out / "annotations.json",
         "--mask", m, "--boost", out / "boost.json",
         "--out", out / "samples.ndjson", "--seed", args.seed + 2])
    run(["train", "--samples", out / "samples.ndjson", "--out", out / "model.json",
         "--seed", args.seed + 3, "--log-out", out / "train_log.csv"])
    run(["segment", "--detections", d, "--model", out / "model.json",
         "--boost", out / "boost.json", "--mask", m, "--threshold", args.threshold,
         "--out", out / "segmentation.json", "--confidences-out", out / "confidences.csv"])
    run(["eval-samples", "--samples", out / "samples.ndjson", "--model", out / "model.json",
         "--out", out / "report_samples.json"])
    run(["eval-temporal", "--segmentation", out / "segmentation.json",
         "--annotations", out / "annotations.json", "--out", out / "report_temporal.json"])
    run(["sweep", "--detections", d, "--model", out / "model.json",
         "--boost", out / "boost.json", "--mask", m,
         "--annotations", out / "annotations.json",
         "--thresholds", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
         "--out", out / "sweep.csv"])

    for name in ("report_retrieval", "report_samples", "report_temporal"):
        print(f"{name}: {json.loads((out / (name + '.json')).read_text())}")
    print(f"artifacts in {out}/")


if __name__ == "__main__":
    main()

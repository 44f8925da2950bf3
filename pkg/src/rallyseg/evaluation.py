"""Metrics: retrieval precision, sample-wise P/R/F1 and AUROC, and
tolerance-matched temporal boundary scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Iterable, Mapping

import numpy as np

from .errors import EvalError
from .model import PipelineParams, RallyAnnotation
from .scoring import ScoredCandidate
from .segmenter import RallySegmentation, segment, sliding_confidence


def retrieval_precision(
    retrieved: Iterable[ScoredCandidate],
    truth: Mapping[int, Collection[int]],
) -> float:
    """(N_crops - FP) / N_crops over all retrieved candidates."""
    n_crops = 0
    fp = 0
    for cand in retrieved:
        if cand.frame_index not in truth:
            raise EvalError(f"truth does not cover frame {cand.frame_index}")
        n_crops += 1
        if cand.detection_index not in truth[cand.frame_index]:
            fp += 1
    if n_crops == 0:
        raise EvalError("no retrieved candidates")
    return (n_crops - fp) / n_crops


def precision_at_thresholds(
    precisions: Iterable[float], thresholds: Iterable[float]
) -> list[float]:
    """Fraction of videos with precision >= each threshold."""
    precs = list(precisions)
    ths = list(thresholds)
    if any(b < a for a, b in zip(ths, ths[1:])):
        raise EvalError("thresholds must be sorted ascending")
    if not precs:
        raise EvalError("no per-video precisions")
    return [sum(1 for p in precs if p >= th) / len(precs) for th in ths]


def prf1(
    confidences: Iterable[float], labels: Iterable[float], threshold: float
) -> tuple[float, float, float]:
    conf = np.asarray(list(confidences), dtype=float)
    lab = np.asarray(list(labels), dtype=float)
    pred = conf >= threshold
    pos = lab == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    fn = int(np.sum(~pred & pos))
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def auroc(confidences: Iterable[float], labels: Iterable[float]) -> float:
    """Probability that a random positive outscores a random negative
    (ties count one half), via tie-averaged ranks."""
    conf = np.asarray(list(confidences), dtype=float)
    lab = np.asarray(list(labels), dtype=float) == 1
    n_pos = int(lab.sum())
    n_neg = int((~lab).sum())
    if n_pos == 0 or n_neg == 0:
        raise EvalError("AUROC needs at least one positive and one negative")

    order = np.argsort(conf, kind="mergesort")
    ranks = np.empty(len(conf))
    sorted_conf = conf[order]
    i = 0
    while i < len(conf):
        j = i
        while j + 1 < len(conf) and sorted_conf[j + 1] == sorted_conf[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average of 1-based ranks
        i = j + 1

    pos_rank_sum = float(ranks[lab].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# temporal boundary matching


@dataclass(frozen=True)
class MatchCounts:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class TemporalMatchResult:
    serve: MatchCounts
    end: MatchCounts
    serve_pairs: tuple[tuple[float, float], ...]
    end_pairs: tuple[tuple[float, float], ...]


def match_points(
    predicted: Iterable[float], truth: Iterable[float], tolerance_s: float
) -> tuple[MatchCounts, tuple[tuple[float, float], ...]]:
    """Greedy one-to-one matching in increasing prediction time: each
    prediction takes the nearest unmatched truth point within tolerance
    (ties toward the earlier truth point)."""
    if tolerance_s <= 0:
        raise EvalError(f"tolerance_s must be positive, got {tolerance_s}")
    pred = sorted(predicted)
    true = sorted(truth)
    matched: set[int] = set()
    pairs: list[tuple[float, float]] = []
    for p in pred:
        best_j = None
        best_key = None
        for j, tt in enumerate(true):
            if j in matched:
                continue
            dist = abs(p - tt)
            if dist > tolerance_s:
                continue
            key = (dist, tt)
            if best_key is None or key < best_key:
                best_key = key
                best_j = j
        if best_j is not None:
            matched.add(best_j)
            pairs.append((p, true[best_j]))
    tp = len(pairs)
    counts = MatchCounts(tp=tp, fp=len(pred) - tp, fn=len(true) - tp)
    return counts, tuple(pairs)


def temporal_match(
    pred: RallySegmentation, truth: RallyAnnotation, tolerance_s: float
) -> TemporalMatchResult:
    """Serve and end-of-rally boundaries matched independently."""
    serve_counts, serve_pairs = match_points(
        pred.serves, [s for s, _ in truth.intervals], tolerance_s
    )
    end_counts, end_pairs = match_points(
        pred.ends, [e for _, e in truth.intervals], tolerance_s
    )
    return TemporalMatchResult(serve_counts, end_counts, serve_pairs, end_pairs)


def threshold_sweep(
    frames,
    model,
    c,
    truth: RallyAnnotation,
    thresholds: Iterable[float],
    params: PipelineParams,
    boost_ctx=None,
    frame_features=None,
) -> list[dict]:
    """Serve/end P, R, F1 per threshold; confidences computed once."""
    confidences = sliding_confidence(frames, model, c, params, boost_ctx, frame_features)
    rows = []
    for th in thresholds:
        seg = segment(confidences, th, params.min_rally_s)
        result = temporal_match(seg, truth, params.tolerance_s)
        rows.append(
            {
                "threshold": float(th),
                "serve_precision": result.serve.precision,
                "serve_recall": result.serve.recall,
                "serve_f1": result.serve.f1,
                "end_precision": result.end.precision,
                "end_recall": result.end.recall,
                "end_f1": result.end.f1,
            }
        )
    return rows

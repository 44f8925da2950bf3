import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rallyseg import evaluation
from rallyseg.errors import EvalError
from rallyseg.evaluation import (
    auroc,
    match_points,
    precision_at_thresholds,
    prf1,
    retrieval_precision,
    temporal_match,
)
from rallyseg.model import RallyAnnotation
from rallyseg.scoring import ScoredCandidate
from rallyseg.segmenter import RallySegmentation


def cand(frame, det):
    return ScoredCandidate(frame, det, 0.5)


def test_retrieval_precision_fig5_number():
    # 200 retrieved crops, 28 false positives -> 0.86
    truth = {i: (0, 1) for i in range(100)}
    cands = []
    for i in range(100):
        cands.append(cand(i, 0))
        cands.append(cand(i, 1 if i >= 28 else 5))
    assert retrieval_precision(cands, truth) == pytest.approx(0.86)


def test_retrieval_precision_all_correct():
    truth = {i: (0, 1) for i in range(10)}
    cands = [cand(i, k) for i in range(10) for k in (0, 1)]
    assert retrieval_precision(cands, truth) == 1.0


def test_retrieval_precision_empty_errors():
    with pytest.raises(EvalError, match="no retrieved"):
        retrieval_precision([], {0: (0,)})


def test_retrieval_precision_uncovered_frame_errors():
    with pytest.raises(EvalError, match="cover"):
        retrieval_precision([cand(3, 0)], {0: (0,)})


def test_precision_at_thresholds_counting():
    out = precision_at_thresholds([0.8, 0.9, 1.0], [0.75, 0.85, 0.95])
    assert out == pytest.approx([1.0, 2 / 3, 1 / 3])


def test_precision_at_thresholds_single_video_step():
    out = precision_at_thresholds([0.9], [0.5, 0.9, 0.95])
    assert out == [1.0, 1.0, 0.0]


def test_precision_at_thresholds_unsorted_errors():
    with pytest.raises(EvalError, match="ascending"):
        precision_at_thresholds([0.5], [0.9, 0.1])


@given(
    precs=st.lists(st.floats(0, 1), min_size=1, max_size=20),
    ths=st.lists(st.floats(0, 1), min_size=1, max_size=10),
)
def test_precision_curve_non_increasing(precs, ths):
    curve = precision_at_thresholds(precs, sorted(ths))
    assert all(b <= a + 1e-12 for a, b in zip(curve, curve[1:]))


def test_prf1_perfect_separation():
    conf = [0.9, 0.8, 0.2, 0.1]
    labels = [1, 1, 0, 0]
    assert prf1(conf, labels, 0.5) == (1.0, 1.0, 1.0)
    assert auroc(conf, labels) == 1.0


def test_prf1_zero_when_nothing_predicted():
    p, r, f1 = prf1([0.1, 0.2], [1, 0], 0.5)
    assert (p, r, f1) == (0.0, 0.0, 0.0)


def test_auroc_hand_counted():
    # pairs: (.9,.8) ok, (.9,.3) ok, (.4,.8) wrong, (.4,.3) ok -> 3/4
    assert auroc([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) == pytest.approx(0.75)


def test_auroc_label_reversal_symmetry():
    conf = [0.9, 0.7, 0.6, 0.4, 0.2]
    labels = [1, 0, 1, 1, 0]
    flipped = [1 - v for v in labels]
    assert auroc(conf, labels) == pytest.approx(1.0 - auroc(conf, flipped))


def test_auroc_single_class_errors():
    with pytest.raises(EvalError):
        auroc([0.5, 0.6], [1, 1])


def brute_force_auroc(conf, labels):
    pos = [c for c, l in zip(conf, labels) if l == 1]
    neg = [c for c, l in zip(conf, labels) if l != 1]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else (0.5 if p == n else 0.0)
    return total / (len(pos) * len(neg))


@settings(max_examples=60)
@given(
    conf=st.lists(st.floats(0, 1).map(lambda v: round(v, 2)), min_size=2, max_size=60),
    seed=st.integers(0, 1000),
)
def test_auroc_matches_pair_oracle(conf, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, len(conf)).tolist()
    if len(set(labels)) < 2:
        labels[0], labels[-1] = 0, 1
    assert auroc(conf, labels) == pytest.approx(brute_force_auroc(conf, labels), abs=1e-9)


# ---------------------------------------------------------------------------
# temporal matching


def seg_with(serves, ends):
    intervals = tuple(zip(serves, ends))
    return RallySegmentation((), intervals, tuple(serves), tuple(ends))


def test_match_within_tolerance():
    counts, pairs = match_points([12.9], [10.0], 3.0)
    assert (counts.tp, counts.fp, counts.fn) == (1, 0, 0)
    assert pairs == ((12.9, 10.0),)


def test_match_outside_tolerance():
    counts, _ = match_points([13.1], [10.0], 3.0)
    assert (counts.tp, counts.fp, counts.fn) == (0, 1, 1)


def test_match_one_to_one():
    counts, pairs = match_points([9.5, 10.5], [10.0], 3.0)
    assert (counts.tp, counts.fp, counts.fn) == (1, 1, 0)
    assert pairs == ((9.5, 10.0),)


def test_match_prefers_nearest():
    counts, pairs = match_points([10.0], [8.5, 10.2], 3.0)
    assert pairs == ((10.0, 10.2),)
    assert counts.fn == 1


def test_match_tolerance_positive():
    with pytest.raises(EvalError):
        match_points([1.0], [1.0], 0.0)


def test_temporal_match_sides_independent():
    truth = RallyAnnotation(((10.0, 20.0), (30.0, 40.0)))
    pred = seg_with([10.5, 30.2], [19.0, 44.0])
    res = temporal_match(pred, truth, 3.0)
    assert res.serve.f1 == 1.0
    assert (res.end.tp, res.end.fp, res.end.fn) == (1, 1, 1)


@given(
    preds=st.lists(st.floats(0, 100), max_size=12),
    truths=st.lists(st.floats(0, 100), max_size=12),
    tol=st.floats(0.5, 10.0),
)
def test_match_counts_bounded(preds, truths, tol):
    counts, pairs = match_points(preds, truths, tol)
    assert counts.tp <= min(len(preds), len(truths))
    assert counts.tp + counts.fp == len(preds)
    assert counts.tp + counts.fn == len(truths)
    assert 0.0 <= counts.precision <= 1.0
    assert 0.0 <= counts.recall <= 1.0
    for p, t in pairs:
        assert abs(p - t) <= tol


# ---------------------------------------------------------------------------
# threshold sweep


def test_threshold_sweep_zero_noise_plateau():
    from rallyseg import aggregation, classifier, sampler, synthetic
    from rallyseg.model import PipelineParams

    spec = synthetic.make_default_spec(n_rallies=3, rally_len_s=8.0, gap_s=12.0, seed=6)
    frames, ann, _ = synthetic.generate_synthetic(spec)
    c = spec.table_center
    params = PipelineParams()
    buf, sc = aggregation.build_buffer(frames, c, params.m_frames, params)
    ctx = aggregation.fit_boost(buf, sc, params, seed=0)
    samples = sampler.extract_samples(frames, ann, c, params, seed=1, boost_ctx=ctx)
    model, _ = classifier.train(samples, classifier.TrainConfig(seed=2))

    rows = evaluation.threshold_sweep(
        frames, model, c, ann, [0.35, 0.45, 0.5, 0.55, 1.0], params, ctx
    )
    plateau = [r for r in rows if r["threshold"] in (0.45, 0.5, 0.55)]
    assert all(r["serve_f1"] == 1.0 and r["end_f1"] == 1.0 for r in plateau)
    top = rows[-1]
    assert top["serve_f1"] == 0.0 and top["end_f1"] == 0.0

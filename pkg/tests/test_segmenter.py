import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rallyseg import classifier, sampler, segmenter, synthetic
from rallyseg.classifier import PooledLogisticModel
from rallyseg.errors import SegmenterError
from rallyseg.model import PipelineParams


def test_segment_basic_run():
    confs = [(0.0, 0.1), (1.0, 0.9), (2.0, 0.9), (3.0, 0.1)]
    seg = segmenter.segment(confs, threshold=0.5, min_rally_s=0.0)
    assert seg.intervals == ((1.0, 2.0),)
    assert seg.serves == (1.0,)
    assert seg.ends == (2.0,)


def test_segment_all_below_threshold():
    confs = [(float(t), 0.2) for t in range(5)]
    seg = segmenter.segment(confs, threshold=0.5)
    assert seg.intervals == ()
    assert seg.serves == () and seg.ends == ()


def test_segment_isolated_point_dropped_by_min_duration():
    confs = [(0.0, 0.1), (1.0, 0.9), (2.0, 0.1)]
    seg = segmenter.segment(confs, threshold=0.5, min_rally_s=1.0)
    assert seg.intervals == ()
    kept = segmenter.segment(confs, threshold=0.5, min_rally_s=0.0)
    assert kept.intervals == ((1.0, 1.0),)


def test_segment_run_reaching_the_end():
    confs = [(0.0, 0.1), (1.0, 0.9), (2.0, 0.9)]
    seg = segmenter.segment(confs, threshold=0.5)
    assert seg.intervals == ((1.0, 2.0),)


def brute_force_runs(confs, threshold, min_rally_s):
    runs = []
    current = []
    for t, p in confs:
        if p >= threshold:
            current.append(t)
        else:
            if current:
                runs.append((current[0], current[-1]))
            current = []
    if current:
        runs.append((current[0], current[-1]))
    return tuple(r for r in runs if r[1] - r[0] >= min_rally_s)


@given(
    ps=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40),
    threshold=st.floats(0.05, 0.95),
    min_rally=st.sampled_from([0.0, 1.0, 2.5]),
)
def test_segment_matches_brute_force(ps, threshold, min_rally):
    confs = [(float(i) * 0.5, p) for i, p in enumerate(ps)]
    seg = segmenter.segment(confs, threshold, min_rally)
    assert seg.intervals == brute_force_runs(confs, threshold, min_rally)


@given(
    ps=st.lists(st.floats(0.0, 1.0), min_size=1, max_size=40),
    th_lo=st.floats(0.05, 0.9),
    bump=st.floats(0.0, 0.5),
)
def test_raising_threshold_never_extends_duration(ps, th_lo, bump):
    confs = [(float(i), p) for i, p in enumerate(ps)]
    lo = segmenter.segment(confs, th_lo, 0.0)
    hi = segmenter.segment(confs, min(0.99, th_lo + bump), 0.0)
    total = lambda seg: sum(e - s for s, e in seg.intervals)
    assert total(hi) <= total(lo) + 1e-12


def synth_setup(noise=0.0, seed=0, n_rallies=3):
    spec = synthetic.make_default_spec(
        n_rallies=n_rallies, rally_len_s=8.0, gap_s=12.0, noise_sigma=noise, seed=seed
    )
    frames, ann, _ = synthetic.generate_synthetic(spec)
    return frames, ann, spec.table_center


def test_sliding_constant_stream_constant_confidence():
    frames, _, c = synth_setup()
    params = PipelineParams()
    d_reid = 8
    dim = sampler.feature_dim(d_reid)
    model = PooledLogisticModel(np.zeros(dim), 0.25)
    confs = segmenter.sliding_confidence(frames, model, c, params)
    ps = {p for _, p in confs}
    assert len(ps) == 1  # zero weights: identical confidence everywhere


def test_sliding_single_window_stream():
    frames, _, c = synth_setup()
    params = PipelineParams()
    span = 40 * params.frameskip  # (T-1) * skip at fps 25
    sub = frames[: span + 1]
    model = PooledLogisticModel(np.zeros(sampler.feature_dim(8)), 0.0)
    confs = segmenter.sliding_confidence(sub, model, c, params)
    assert len(confs) == 1
    center = sub[span // 2]
    assert confs[0][0] == pytest.approx(center.t)


def test_sliding_stream_too_short():
    frames, _, c = synth_setup()
    model = PooledLogisticModel(np.zeros(sampler.feature_dim(8)), 0.0)
    with pytest.raises(SegmenterError, match="shorter"):
        segmenter.sliding_confidence(frames[:50], model, c, PipelineParams())


def test_sliding_confidences_sorted_and_stride():
    frames, _, c = synth_setup()
    params = PipelineParams()
    model = PooledLogisticModel(np.zeros(sampler.feature_dim(8)), 0.0)
    confs = segmenter.sliding_confidence(frames, model, c, params)
    ts = [t for t, _ in confs]
    assert ts == sorted(ts)
    step = params.frameskip / 25.0
    assert np.allclose(np.diff(ts), step)


def test_end_to_end_determinism():
    from rallyseg import aggregation

    frames, ann, c = synth_setup(noise=0.3, seed=4)
    params = PipelineParams()
    buf, sc = aggregation.build_buffer(frames, c, params.m_frames, params)
    ctx = aggregation.fit_boost(buf, sc, params, seed=0)
    samples = sampler.extract_samples(frames, ann, c, params, seed=1, boost_ctx=ctx)
    model, _ = classifier.train(samples, classifier.TrainConfig(seed=2))
    seg_a = segmenter.segment(
        segmenter.sliding_confidence(frames, model, c, params, ctx), 0.5, 1.0
    )
    seg_b = segmenter.segment(
        segmenter.sliding_confidence(frames, model, c, params, ctx), 0.5, 1.0
    )
    assert seg_a == seg_b


def test_segmentation_json_round_trip():
    confs = [(0.0, 0.1), (1.0, 0.9), (2.0, 0.9), (3.0, 0.1)]
    seg = segmenter.segment(confs, 0.5)
    obj = seg.to_obj("v")
    rebuilt = segmenter.RallySegmentation.from_obj(obj)
    assert rebuilt.intervals == seg.intervals
    assert rebuilt.serves == seg.serves
    assert rebuilt.ends == seg.ends

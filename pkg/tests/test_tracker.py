import numpy as np
import pytest

import reference_tracker as ref
from helpers import as_reference_frames, equivalence_sequences, relabel
from probtrack import formats, synth
from probtrack.motmetrics import clear_mot, evaluate
from probtrack.probdet import GaussianBox
from probtrack.tracker import FrameDetections, Tracker, TrackerConfig, TrackStatus, run_sequence


def det(x, y=100.0, w=40.0, h=80.0, score=0.9, var=1.0, label=0):
    return GaussianBox([x, y, x + w, y + h], np.eye(4) * var, score, label)


def walk(n, start=1, step=2.0, **kw):
    return [FrameDetections(k, [det(100 + step * (k - start), **kw)]) for k in range(start, start + n)]


@pytest.mark.parametrize("spec", equivalence_sequences(), ids=lambda s: s.name)
def test_baseline_matches_reference(spec):
    _, dets = synth.generate(spec)
    ours = formats.format_results(run_sequence(dets, TrackerConfig.baseline()))
    theirs = ref.results_csv(ref.track_sequence(as_reference_frames(dets)))
    assert relabel(ours) == relabel(theirs)


def test_first_frame_tracks_are_active_later_ones_tentative():
    t = Tracker(TrackerConfig.baseline())
    assert [o.track_id for o in t.step(FrameDetections(1, [det(100)])).outputs] == [1]
    out = t.step(FrameDetections(2, [det(102), det(400)]))
    assert [o.track_id for o in out.outputs] == [1]
    out = t.step(FrameDetections(3, [det(104), det(402)]))
    assert [o.track_id for o in out.outputs] == [1, 2]


def test_unmatched_tentative_is_removed():
    t = Tracker(TrackerConfig.baseline())
    t.step(FrameDetections(1, []))
    t.step(FrameDetections(2, [det(100)]))
    assert t.tracks[0].status is TrackStatus.TENTATIVE
    t.step(FrameDetections(3, []))
    assert t.tracks == []


def test_empty_frame_ages_tracks():
    t = Tracker(TrackerConfig.baseline())
    t.step(FrameDetections(1, [det(100)]))
    out = t.step(FrameDetections(2, []))
    assert out.outputs == []
    assert t.tracks[0].status is TrackStatus.LOST and t.tracks[0].frames_since_update == 1


def test_lost_track_recovers_same_id():
    results = run_sequence(walk(3) + [FrameDetections(4, [])] + walk(3, start=5), TrackerConfig.baseline())
    ids = {o.track_id for r in results for o in r.outputs}
    assert ids == {1}


def test_lost_track_expires():
    t = Tracker(TrackerConfig.baseline(max_lost=2))
    t.step(FrameDetections(1, [det(100)]))
    for k in range(2, 5):
        t.step(FrameDetections(k, []))
    assert t.tracks == []


def test_out_of_order_frame_rejected():
    t = Tracker()
    t.step(FrameDetections(5, []))
    with pytest.raises(ValueError):
        t.step(FrameDetections(5, []))


def test_degenerate_boxes_dropped():
    flat = GaussianBox([0, 10, 30, 10], np.eye(4), 0.9)
    assert run_sequence([FrameDetections(1, [flat])], TrackerConfig.baseline())[0].outputs == []


def test_low_score_detection_only_continues_tracks():
    frames = [FrameDetections(1, [det(100)]), FrameDetections(2, [det(102, score=0.3)]),
              FrameDetections(3, [det(500, score=0.3)])]
    results = run_sequence(frames, TrackerConfig.baseline())
    assert [len(r.outputs) for r in results] == [1, 1, 0]


def test_labels_never_cross():
    frames = [FrameDetections(1, [det(100, label=0)]), FrameDetections(2, [det(101, label=1)])]
    results = run_sequence(frames, TrackerConfig.baseline())
    assert results[1].outputs == []


def test_ellipse_filter_drops_uncertain_detections():
    frames = [FrameDetections(1, [det(100, var=400.0), det(300, var=1.0)])]
    assert len(run_sequence(frames, TrackerConfig())[0].outputs) == 1
    assert len(run_sequence(frames, TrackerConfig.baseline())[0].outputs) == 2


def test_detection_covariance_sets_update_strength():
    def shift(var):
        cfg = TrackerConfig.baseline(enable_kfcov=True, init_with_cov=False)
        t = Tracker(cfg)
        t.step(FrameDetections(1, [det(100)]))
        before = t.tracks[0].kf.x[0]
        t.step(FrameDetections(2, [det(110, var=var)]))
        return t.tracks[0].kf.x[0] - before

    assert shift(0.1) > shift(10.0) > shift(1000.0) > 0


def test_crossing_mechanism():
    gt, dets = synth.generate(synth.scenario_low_overlap_crossing())
    base = clear_mot(gt, run_sequence(dets, TrackerConfig.baseline())).ids
    relax = clear_mot(gt, run_sequence(dets, TrackerConfig.baseline(enable_relax=True))).ids
    assert base >= 1 and relax < base


def test_relaxed_stage_is_used():
    _, dets = synth.generate(synth.scenario_low_overlap_crossing())
    t = Tracker(TrackerConfig.baseline(enable_relax=True))
    used = 0
    for f in dets:
        t.step(f)
        used += len(t.last_stages["relaxed"])
    assert used > 0


def test_noiseless_scenario_is_perfect():
    gt, dets = synth.generate(synth.scenario_noiseless())
    for cfg in (TrackerConfig(), TrackerConfig.baseline()):
        m = evaluate(gt, run_sequence(dets, cfg))
        assert m["mMOTA"] == 1.0 and m["mIDF1"] == 1.0


def test_runs_are_deterministic():
    _, dets = synth.generate(synth.random_scenario(n_objects=5, frame_count=40, seed=3))
    a = formats.format_results(run_sequence(dets))
    assert a == formats.format_results(run_sequence(dets))


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        TrackerConfig(tau1=0.2, tau2=0.3)
    with pytest.raises(ValueError):
        TrackerConfig(score_low=0.7, score_high=0.6)
    with pytest.raises(ValueError):
        TrackerConfig.from_dict({"tau3": 1.0})
    cfg = TrackerConfig().with_extensions("relax")
    assert cfg.enable_relax and not (cfg.enable_kfcov or cfg.enable_ellipse or cfg.enable_greedy)
    assert TrackerConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        cfg.with_extensions("reid")

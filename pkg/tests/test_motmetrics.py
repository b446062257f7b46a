import itertools
import math

import numpy as np
import pytest

from probtrack.motmetrics import (
    GtFrame,
    GtObject,
    clear_mot,
    evaluate,
    format_table,
    id_scores,
    idf1,
    multiclass_mean,
    trajectory_overlaps,
)
from probtrack.tracker import FrameResult, TrackOutput


def box(x, y=0.0, s=10.0):
    return np.array([x, y, x + s, y + s])


def out(tid, b, label=0):
    return TrackOutput(tid, b, 1.0, label)


def hand_counted():
    """Two objects over five frames with one switch, one miss and one stray box."""
    gt, pred = [], []
    for k in range(1, 6):
        gt.append(GtFrame(k, [GtObject(1, box(0)), GtObject(2, box(100))]))
        outputs = [out(1, box(0))]
        if k <= 2:
            outputs.append(out(2, box(100)))
        elif k <= 4:
            outputs.append(out(3, box(100)))
        else:
            outputs.append(out(9, box(400)))
        pred.append(FrameResult(k, outputs))
    return gt, pred


def test_hand_counted_mota():
    t = clear_mot(*hand_counted())
    assert (t.fp, t.fn, t.ids, t.gt_count) == (1, 1, 1, 10)
    assert t.mota == 0.7


def test_idf1_half_split():
    gt = [GtFrame(k, [GtObject(1, box(0))]) for k in range(1, 11)]
    pred = [FrameResult(k, [out(1 if k <= 5 else 2, box(0))]) for k in range(1, 11)]
    assert idf1(gt, pred) == 0.5
    assert clear_mot(gt, pred).ids == 1


def test_perfect_tracking_under_relabeling():
    rng = np.random.default_rng(0)
    ids = rng.permutation(np.arange(100, 105))
    gt, pred = [], []
    for k in range(1, 8):
        objs = [GtObject(i + 1, box(30.0 * i + k, 5.0 * i)) for i in range(5)]
        gt.append(GtFrame(k, objs))
        pred.append(FrameResult(k, [out(int(ids[i]), o.box) for i, o in enumerate(objs)]))
    m = evaluate(gt, pred)
    assert m["mMOTA"] == 1.0 and m["mIDF1"] == 1.0


def test_switch_counted_across_gap():
    gt = [GtFrame(k, [GtObject(1, box(0))]) for k in range(1, 4)]
    pred = [FrameResult(1, [out(1, box(0))]), FrameResult(2, []), FrameResult(3, [out(2, box(0))])]
    t = clear_mot(gt, pred)
    assert (t.ids, t.fn) == (1, 1)


def test_previous_match_kept_over_better_iou():
    # track 1 still overlaps enough, so it keeps object 1 although track 2 fits better
    gt = [GtFrame(1, [GtObject(1, box(0))]), GtFrame(2, [GtObject(1, box(0))])]
    pred = [FrameResult(1, [out(1, box(0))]), FrameResult(2, [out(1, box(1)), out(2, box(0))])]
    t = clear_mot(gt, pred)
    assert t.ids == 0 and t.fp == 1


def exhaustive_idtp(gt, pred):
    gids, tids, overlap, _, _ = trajectory_overlaps(gt, pred)
    n, m = overlap.shape
    best = 0
    if n <= m:
        for perm in itertools.permutations(range(m), n):
            best = max(best, sum(overlap[i, perm[i]] for i in range(n)))
    else:
        for perm in itertools.permutations(range(n), m):
            best = max(best, sum(overlap[perm[j], j] for j in range(m)))
    return best


@pytest.mark.parametrize("seed", range(25))
def test_idf1_matches_exhaustive(seed):
    rng = np.random.default_rng(seed)
    gt, pred = [], []
    for k in range(1, 9):
        objs = [GtObject(i, box(40.0 * i)) for i in range(1, 4) if rng.uniform() < 0.9]
        gt.append(GtFrame(k, objs))
        outputs = [out(int(rng.integers(1, 6)), o.box + rng.normal(0, 1.5, 4)) for o in objs]
        uniq = {o.track_id: o for o in outputs}
        pred.append(FrameResult(k, list(uniq.values())))
    s = id_scores(gt, pred)
    assert s.idtp == exhaustive_idtp(gt, pred)


def test_multiclass_mean_skips_absent_and_nan():
    assert multiclass_mean({0: 0.5, 1: float("nan"), 2: 1.0}) == 0.75
    assert multiclass_mean({0: 0.5, 2: 1.0}, present={0}) == 0.5
    assert math.isnan(multiclass_mean({}))


def test_evaluate_per_class_and_table():
    gt = [GtFrame(1, [GtObject(1, box(0), label=0), GtObject(2, box(50), label=1)])]
    pred = [FrameResult(1, [out(1, box(0), 0), out(2, box(50), 0)])]
    m = evaluate(gt, pred)
    assert m["per_class"][0]["fp"] == 1 and m["per_class"][1]["fn"] == 1
    assert m["mMOTA"] == pytest.approx((0.0 + 0.0) / 2)
    table = format_table(m)
    assert "mean/total" in table and len({len(line) for line in table.splitlines()}) == 1


def test_prediction_outside_gt_range_is_error():
    gt = [GtFrame(1, [GtObject(1, box(0))])]
    with pytest.raises(ValueError):
        clear_mot(gt, [FrameResult(5, [out(1, box(0))])])


def test_empty_gt_gives_nan_mota():
    assert math.isnan(clear_mot([], []).mota)

"""CLEAR MOT and IDF1 evaluation of tracker output against ground truth."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .assignment import hungarian, iou_cost


@dataclass
class GtObject:
    id: int
    box: np.ndarray  # tlbr
    label: int = 0
    visible: float = 1.0


@dataclass
class GtFrame:
    frame: int
    objects: list[GtObject] = field(default_factory=list)


@dataclass
class FrameEvents:
    frame: int
    matches: list[tuple[int, int]] = field(default_factory=list)  # (gt id, track id)
    switches: list[tuple[int, int]] = field(default_factory=list)
    false_positives: list[int] = field(default_factory=list)
    misses: list[int] = field(default_factory=list)


@dataclass
class MotTally:
    fp: int = 0
    fn: int = 0
    ids: int = 0
    matches: int = 0
    gt_count: int = 0
    events: list[FrameEvents] = field(default_factory=list)

    @property
    def mota(self) -> float:
        if self.gt_count == 0:
            return float("nan")
        return 1.0 - (self.fp + self.fn + self.ids) / self.gt_count


def _align(gt, pred):
    gt_by_frame = {f.frame: f.objects for f in gt}
    pred_by_frame = {f.frame: f.outputs for f in pred}
    if pred_by_frame and gt_by_frame:
        lo, hi = min(gt_by_frame), max(gt_by_frame)
        outside = [k for k, v in pred_by_frame.items() if v and not lo <= k <= hi]
        if outside:
            raise ValueError(f"prediction frames {sorted(outside)[:5]} fall outside gt frames {lo}..{hi}")
    elif pred_by_frame and any(pred_by_frame.values()) and not gt_by_frame:
        raise ValueError("predictions given for a sequence without ground truth")
    frames = sorted(set(gt_by_frame) | set(pred_by_frame))
    return [(k, gt_by_frame.get(k, []), pred_by_frame.get(k, [])) for k in frames]


def clear_mot(gt, pred, iou_thr: float = 0.5) -> MotTally:
    """Accumulate FP, FN and ID switches frame by frame.

    Correspondences from the previous frame are kept while they still
    overlap by ``iou_thr``; the rest are matched optimally. A switch is
    counted whenever a gt object is matched to a track other than the one
    it was last matched to, even across gaps.
    """
    tally = MotTally()
    current: dict[int, int] = {}  # gt id -> track id, previous frame only
    last_match: dict[int, int] = {}
    for k, objects, outputs in _align(gt, pred):
        ev = FrameEvents(k)
        gt_index = {o.id: o for o in objects}
        out_index = {o.track_id: o for o in outputs}
        pairs = []
        for gid, tid in current.items():
            if gid in gt_index and tid in out_index:
                if geometry.iou(gt_index[gid].box, out_index[tid].box) >= iou_thr:
                    pairs.append((gid, tid))
        kept_g = {g for g, _ in pairs}
        kept_t = {t for _, t in pairs}
        free_g = [o for o in objects if o.id not in kept_g]
        free_t = [o for o in outputs if o.track_id not in kept_t]
        if free_g and free_t:
            cost = iou_cost([o.box for o in free_g], [o.box for o in free_t])
            for r, c in hungarian(cost, 1.0 - iou_thr).pairs:
                pairs.append((free_g[r].id, free_t[c].track_id))
        for gid, tid in pairs:
            if gid in last_match and last_match[gid] != tid:
                ev.switches.append((gid, tid))
            last_match[gid] = tid
        matched_g = {g for g, _ in pairs}
        matched_t = {t for _, t in pairs}
        ev.matches = sorted(pairs)
        ev.misses = sorted(o.id for o in objects if o.id not in matched_g)
        ev.false_positives = sorted(o.track_id for o in outputs if o.track_id not in matched_t)
        current = dict(pairs)
        tally.gt_count += len(objects)
        tally.matches += len(pairs)
        tally.fn += len(ev.misses)
        tally.fp += len(ev.false_positives)
        tally.ids += len(ev.switches)
        tally.events.append(ev)
    return tally


def trajectory_overlaps(gt, pred, iou_thr: float = 0.5):
    """Per (gt id, track id) count of frames where both overlap by ``iou_thr``.

    Returns ``(gt_ids, track_ids, overlap, gt_lengths, track_lengths)``.
    """
    gt_len: dict[int, int] = defaultdict(int)
    tr_len: dict[int, int] = defaultdict(int)
    hits: dict[tuple[int, int], int] = defaultdict(int)
    for _, objects, outputs in _align(gt, pred):
        for o in objects:
            gt_len[o.id] += 1
        for o in outputs:
            tr_len[o.track_id] += 1
        for g in objects:
            for t in outputs:
                if geometry.iou(g.box, t.box) >= iou_thr:
                    hits[g.id, t.track_id] += 1
    gids, tids = sorted(gt_len), sorted(tr_len)
    overlap = np.zeros((len(gids), len(tids)))
    gpos = {g: i for i, g in enumerate(gids)}
    tpos = {t: j for j, t in enumerate(tids)}
    for (g, t), n in hits.items():
        overlap[gpos[g], tpos[t]] = n
    return gids, tids, overlap, np.array([gt_len[g] for g in gids]), np.array([tr_len[t] for t in tids])


@dataclass(frozen=True)
class IdScores:
    idtp: int
    idfp: int
    idfn: int

    @property
    def idf1(self) -> float:
        denom = 2 * self.idtp + self.idfp + self.idfn
        return 2 * self.idtp / denom if denom else float("nan")


def id_scores(gt, pred, iou_thr: float = 0.5) -> IdScores:
    _, _, overlap, gt_len, tr_len = trajectory_overlaps(gt, pred, iou_thr)
    idtp = 0
    if overlap.size:
        # maximizing matched overlap == minimizing unmatched detections
        a = hungarian(-overlap)
        idtp = int(sum(overlap[r, c] for r, c in a.pairs))
    return IdScores(idtp, int(tr_len.sum()) - idtp, int(gt_len.sum()) - idtp)


def idf1(gt, pred, iou_thr: float = 0.5) -> float:
    """Identity F1 after a global one-to-one matching of trajectories."""
    return id_scores(gt, pred, iou_thr).idf1


def multiclass_mean(per_class_values, present=None) -> float:
    """Unweighted mean over classes; NaN entries and classes not in ``present`` are skipped."""
    vals = [
        v for k, v in per_class_values.items()
        if (present is None or k in present) and not math.isnan(v)
    ]
    return float(np.mean(vals)) if vals else float("nan")


def _by_label(gt, pred, label):
    g = [type(f)(f.frame, [o for o in f.objects if o.label == label]) for f in gt]
    p = [type(f)(f.frame, [o for o in f.outputs if o.label == label]) for f in pred]
    return g, p


def evaluate(gt, pred, iou_thr: float = 0.5) -> dict:
    """Per-class CLEAR MOT and IDF1 plus class-averaged and summed totals."""
    gt, pred = list(gt), list(pred)
    _align(gt, pred)
    gt_labels = {o.label for f in gt for o in f.objects}
    labels = sorted(gt_labels | {o.label for f in pred for o in f.outputs})
    per_class = {}
    for label in labels:
        g, p = _by_label(gt, pred, label)
        t = clear_mot(g, p, iou_thr)
        s = id_scores(g, p, iou_thr)
        per_class[label] = {
            "mota": t.mota,
            "idf1": s.idf1,
            "fp": t.fp,
            "fn": t.fn,
            "ids": t.ids,
            "matches": t.matches,
            "gt_count": t.gt_count,
        }
    return {
        "iou_thr": iou_thr,
        "mMOTA": multiclass_mean({k: v["mota"] for k, v in per_class.items()}, gt_labels),
        "mIDF1": multiclass_mean({k: v["idf1"] for k, v in per_class.items()}, gt_labels),
        "fp": sum(v["fp"] for v in per_class.values()),
        "fn": sum(v["fn"] for v in per_class.values()),
        "ids": sum(v["ids"] for v in per_class.values()),
        "gt_count": sum(v["gt_count"] for v in per_class.values()),
        "per_class": per_class,
    }


def format_table(metrics: dict) -> str:
    """Aligned plain-text rendering of :func:`evaluate` output."""
    header = ["class", "MOTA", "IDF1", "FP", "FN", "IDs", "GT"]
    rows = []
    for label, v in metrics["per_class"].items():
        rows.append([str(label), f"{v['mota']:.4f}", f"{v['idf1']:.4f}", str(v["fp"]),
                     str(v["fn"]), str(v["ids"]), str(v["gt_count"])])
    rows.append(["mean/total", f"{metrics['mMOTA']:.4f}", f"{metrics['mIDF1']:.4f}",
                 str(metrics["fp"]), str(metrics["fn"]), str(metrics["ids"]), str(metrics["gt_count"])])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in [header] + rows]
    return "\n".join(lines) + "\n"

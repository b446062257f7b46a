"""SVG rendering of one frame: boxes colored by error type, corner error ellipses.

Colors follow the usual tracking-error legend: orange for missed ground
truth (FN), red for false positives, blue for identity switches and a
neutral gray for correct boxes. Detections with a covariance get their two
95% corner ellipses drawn on top.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .assignment import hungarian, iou_cost
from .formats import atomic_write
from .motmetrics import FrameEvents, clear_mot
from .probdet import corner_ellipses_95

COLORS = {"fn": "#ff8c00", "fp": "#e31a1c", "ids": "#1f4fd8", "tp": "#808080"}
ELLIPSE_COLOR = "#2ca25f"


def _rect(box, kind: str, label: str | None = None) -> str:
    x1, y1, x2, y2 = (float(v) for v in box)
    out = (f'<rect class="{kind}" x="{x1:.3f}" y="{y1:.3f}" width="{x2 - x1:.3f}" '
           f'height="{y2 - y1:.3f}" fill="none" stroke="{COLORS[kind]}" stroke-width="2"/>')
    if label is not None:
        out += (f'<text x="{x1:.3f}" y="{y1 - 3:.3f}" font-size="12" '
                f'fill="{COLORS[kind]}">{escape(label)}</text>')
    return out


def _ellipse(e) -> str:
    cx, cy = (float(v) for v in e.center)
    deg = math.degrees(e.orientation)
    return (f'<ellipse class="corner" cx="{cx:.3f}" cy="{cy:.3f}" rx="{e.a / 2:.4f}" ry="{e.b / 2:.4f}" '
            f'transform="rotate({deg:.4f} {cx:.3f} {cy:.3f})" fill="none" '
            f'stroke="{ELLIPSE_COLOR}" stroke-width="1"/>')


def detection_events(dets, gt_objects, iou_thr: float = 0.5) -> tuple[list[str], list[bool]]:
    """Per-detection kind ('tp' or 'fp') and per-gt missed flag, by IoU matching."""
    if not gt_objects:
        return ["fp"] * len(dets), []
    if not dets:
        return [], [True] * len(gt_objects)
    a = hungarian(iou_cost([d.mean for d in dets], [g.box for g in gt_objects]), 1.0 - iou_thr)
    kinds = ["fp"] * len(dets)
    missed = [True] * len(gt_objects)
    for r, c in a.pairs:
        kinds[r] = "tp"
        missed[c] = False
    return kinds, missed


def frame_svg(frame: int, image_size=(640, 480), detections=None, outputs=None,
              gt_objects=None, events: FrameEvents | None = None) -> str:
    """SVG document for one frame.

    ``outputs`` are colored from ``events`` (from :func:`clear_mot`); without
    events they are drawn neutral. ``detections`` are matched to
    ``gt_objects`` on their own when no outputs are given.
    """
    w, h = image_size
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f"<title>frame {frame}</title>",
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]
    gt_objects = list(gt_objects or [])
    missed_ids: set[int] = set()
    if outputs is not None:
        fps = set(events.false_positives) if events else set()
        switched = {t for _, t in events.switches} if events else set()
        if events:
            missed_ids = set(events.misses)
        for o in outputs:
            kind = "fp" if o.track_id in fps else "ids" if o.track_id in switched else "tp"
            parts.append(_rect(o.box, kind, str(o.track_id)))
    dets = list(detections or [])
    if dets:
        if outputs is None and gt_objects:
            kinds, missed = detection_events(dets, gt_objects)
            missed_ids = {g.id for g, m in zip(gt_objects, missed) if m}
        else:
            kinds = ["tp"] * len(dets) if outputs is not None or not gt_objects else ["fp"] * len(dets)
        for d, kind in zip(dets, kinds):
            if outputs is None:
                parts.append(_rect(d.mean, kind))
            if d.has_cov:
                parts.extend(_ellipse(e) for e in corner_ellipses_95(d))
    for g in gt_objects:
        if g.id in missed_ids:
            parts.append(_rect(g.box, "fn", f"gt {g.id}"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_svg(path, frame: int, detections=None, results=None, gt=None, image_size=(640, 480)) -> str:
    """Write the SVG for ``frame`` and return its text.

    ``detections`` is a sequence of FrameDetections, ``results`` a sequence of
    FrameResult and ``gt`` a sequence of GtFrame; any may be omitted. When
    both results and gt are given, error types come from CLEAR MOT over the
    whole sequence, so identity switches are judged with full history.
    """
    dets = next((f.detections for f in detections or [] if f.frame == frame), None)
    gt_objects = next((f.objects for f in gt or [] if f.frame == frame), [])
    outputs, events = None, None
    if results is not None:
        outputs = next((f.outputs for f in results if f.frame == frame), [])
        if gt is not None:
            tally = clear_mot(gt, results)
            events = next((e for e in tally.events if e.frame == frame), None)
    text = frame_svg(frame, image_size, dets, outputs, gt_objects, events)
    atomic_write(path, text)
    return text

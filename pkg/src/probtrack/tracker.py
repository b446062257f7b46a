"""Two-stage score-split tracker with uncertainty-aware extensions.

With every ``enable_*`` flag off this is a plain ByteTrack-style tracker:
confirmed tracks are matched to high-score detections, leftover active
tracks to low-score detections, and tentative tracks to leftover
high-score detections, all by IoU. The extensions are:

``enable_ellipse``
    drop detections whose corner error ellipses are large relative to the
    box, once on arrival (``tau1``) and again before the relaxed stage
    (``tau2``).
``enable_relax``
    a final matching stage between unmatched detections and the last
    detections of unmatched confirmed tracks, both enlarged to their
    ellipse extremities and compared by GIoU.
``enable_greedy``
    solve that final stage greedily, lowest-entropy detection first.
``enable_kfcov``
    use each detection's covariance as the Kalman measurement noise.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import geometry
from .assignment import giou_cost, greedy_by_priority, hungarian, iou_cost
from .kalman import KfState, NoiseModel, kf_init, kf_predict, kf_update
from .probdet import GaussianBox, ellipse_filter, gaussian_entropy, relax_box

logger = logging.getLogger(__name__)

EXTENSIONS = ("kfcov", "ellipse", "relax", "greedy")


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"
    REMOVED = "removed"


@dataclass
class TrackerConfig:
    tau1: float = 0.65
    tau2: float = 0.3
    score_high: float = 0.6
    score_low: float = 0.1
    # gates are maximum costs: 1 - IoU for the base stages, 1 - GIoU when relaxed
    match_thr_1: float = 0.9
    match_thr_2: float = 0.5
    match_thr_tentative: float = 0.7
    match_thr_relax: float = 1.0
    max_lost: int = 30
    min_hits: int = 2
    enable_kfcov: bool = True
    enable_ellipse: bool = True
    enable_relax: bool = True
    enable_greedy: bool = True
    init_with_cov: bool = True
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160

    def __post_init__(self):
        if not 0.0 < self.tau2 <= self.tau1:
            raise ValueError(f"need 0 < tau2 <= tau1, got tau1={self.tau1} tau2={self.tau2}")
        if not 0.0 <= self.score_low <= self.score_high <= 1.0:
            raise ValueError("need 0 <= score_low <= score_high <= 1")
        if self.max_lost < 0 or self.min_hits < 1:
            raise ValueError("max_lost must be >= 0 and min_hits >= 1")

    @classmethod
    def baseline(cls, **overrides) -> TrackerConfig:
        flags = {f"enable_{name}": False for name in EXTENSIONS}
        flags.update(overrides)
        return cls(**flags)

    def with_extensions(self, *names: str) -> TrackerConfig:
        """Copy with exactly the named extensions switched on."""
        unknown = set(names) - set(EXTENSIONS)
        if unknown:
            raise ValueError(f"unknown extensions {sorted(unknown)}")
        values = self.to_dict()
        values.update({f"enable_{n}": n in names for n in EXTENSIONS})
        return TrackerConfig(**values)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: dict) -> TrackerConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return cls(**values)

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.std_weight_position, self.std_weight_velocity)


@dataclass
class FrameDetections:
    frame: int
    detections: list[GaussianBox] = field(default_factory=list)


@dataclass
class TrackOutput:
    track_id: int
    box: np.ndarray
    score: float
    label: int


@dataclass
class FrameResult:
    frame: int
    outputs: list[TrackOutput] = field(default_factory=list)


@dataclass(eq=False)
class Track:
    id: int
    kf: KfState
    last_det: GaussianBox
    status: TrackStatus
    frames_since_update: int = 0
    hits: int = 1

    @property
    def predicted_box(self) -> np.ndarray:
        return geometry.cah_to_tlbr(self.kf.x[:4])

    @property
    def label(self) -> int:
        return self.last_det.label


class Tracker:
    """Single-sequence tracker state machine. Not thread-safe."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = cfg or TrackerConfig()
        self.noise = self.cfg.noise
        self.tracks: list[Track] = []
        self.last_frame: int | None = None
        self._next_id = 1
        # per-stage matches of the latest step, for inspection
        self.last_stages: dict[str, list[tuple[int, GaussianBox]]] = {}

    def _measurement(self, det: GaussianBox, for_init: bool = False):
        use_cov = self.cfg.enable_kfcov and (self.cfg.init_with_cov or not for_init)
        if use_cov and det.has_cov:
            return geometry.tlbr_to_cah_with_cov(det.mean, det.cov)
        if use_cov and not for_init:
            logger.info("detection without covariance, using baseline measurement noise")
        return geometry.tlbr_to_cah(det.mean), None

    def _match(self, tracks, dets, cost_fn, max_cost):
        if not tracks or not dets:
            return [], list(tracks), list(dets)
        cost = cost_fn(tracks, dets)
        a = hungarian(cost, max_cost)
        return (
            [(tracks[r], dets[c]) for r, c in a.pairs],
            [tracks[r] for r in a.unmatched_rows],
            [dets[c] for c in a.unmatched_cols],
        )

    @staticmethod
    def _iou_cost(tracks, dets):
        return iou_cost(
            [t.predicted_box for t in tracks],
            [d.mean for d in dets],
            track_labels=[t.label for t in tracks],
            det_labels=[d.label for d in dets],
        )

    def _relaxed_match(self, tracks, dets):
        if not tracks or not dets:
            return [], list(tracks), list(dets)
        cost = giou_cost(
            [relax_box(t.last_det) for t in tracks],
            [relax_box(d) for d in dets],
            track_labels=[t.label for t in tracks],
            det_labels=[d.label for d in dets],
        )
        if self.cfg.enable_greedy:
            entropy = [gaussian_entropy(d) for d in dets]
            a = greedy_by_priority(cost, entropy, self.cfg.match_thr_relax)
        else:
            a = hungarian(cost, self.cfg.match_thr_relax)
        return (
            [(tracks[r], dets[c]) for r, c in a.pairs],
            [tracks[r] for r in a.unmatched_rows],
            [dets[c] for c in a.unmatched_cols],
        )

    def step(self, frame: FrameDetections) -> FrameResult:
        cfg = self.cfg
        if self.last_frame is not None and frame.frame <= self.last_frame:
            raise ValueError(f"frame {frame.frame} arrived after frame {self.last_frame}")
        first_step = self.last_frame is None
        self.last_frame = frame.frame

        dets = [d for d in frame.detections if d.height > geometry.EPS_H]
        if len(dets) < len(frame.detections):
            logger.warning("frame %d: dropped %d degenerate boxes", frame.frame, len(frame.detections) - len(dets))
        if cfg.enable_ellipse:
            dets = ellipse_filter(dets, cfg.tau1)
        high = [d for d in dets if d.score >= cfg.score_high]
        low = [d for d in dets if cfg.score_low <= d.score < cfg.score_high]

        for t in self.tracks:
            x = t.kf.x
            if t.status is not TrackStatus.ACTIVE:
                x = x.copy()
                x[7] = 0.0
            t.kf = kf_predict(KfState(x, t.kf.P), self.noise)

        confirmed = [t for t in self.tracks if t.status in (TrackStatus.ACTIVE, TrackStatus.LOST)]
        tentative = [t for t in self.tracks if t.status is TrackStatus.TENTATIVE]

        m1, rest_tracks, rest_high = self._match(confirmed, high, self._iou_cost, cfg.match_thr_1)
        still_active = [t for t in rest_tracks if t.status is TrackStatus.ACTIVE]
        m2, unmatched_active, _ = self._match(still_active, low, self._iou_cost, cfg.match_thr_2)
        unmatched_confirmed = [
            t for t in rest_tracks if t.status is TrackStatus.LOST or t in unmatched_active
        ]
        m3, unmatched_tentative, rest_high = self._match(tentative, rest_high, self._iou_cost, cfg.match_thr_tentative)

        if cfg.enable_ellipse:
            rest_high = ellipse_filter(rest_high, cfg.tau2)
        m4 = []
        if cfg.enable_relax:
            m4, unmatched_confirmed, rest_high = self._relaxed_match(unmatched_confirmed, rest_high)

        self.last_stages = {
            name: [(t.id, d) for t, d in pairs]
            for name, pairs in (("first", m1), ("second", m2), ("tentative", m3), ("relaxed", m4))
        }
        for t, det in m1 + m2 + m3 + m4:
            z, r = self._measurement(det)
            t.kf = kf_update(t.kf, z, r, self.noise)
            t.last_det = det
            t.hits += 1
            t.frames_since_update = 0
            if t.status is TrackStatus.LOST or (t.status is TrackStatus.TENTATIVE and t.hits >= cfg.min_hits):
                t.status = TrackStatus.ACTIVE

        for t in unmatched_tentative:
            t.status = TrackStatus.REMOVED
        for t in unmatched_confirmed:
            t.frames_since_update += 1
            t.status = TrackStatus.LOST
            if t.frames_since_update > cfg.max_lost:
                t.status = TrackStatus.REMOVED

        for det in rest_high:
            z, r = self._measurement(det, for_init=True)
            status = TrackStatus.ACTIVE if first_step else TrackStatus.TENTATIVE
            self.tracks.append(Track(self._next_id, kf_init(z, r, self.noise), det, status))
            self._next_id += 1

        self.tracks = [t for t in self.tracks if t.status is not TrackStatus.REMOVED]
        outputs = [
            TrackOutput(t.id, t.predicted_box, t.last_det.score, t.label)
            for t in self.tracks
            if t.status is TrackStatus.ACTIVE and t.frames_since_update == 0
        ]
        return FrameResult(frame.frame, sorted(outputs, key=lambda o: o.track_id))


def run_sequence(frames, cfg: TrackerConfig | None = None) -> list[FrameResult]:
    """Run a fresh tracker over ``frames`` in order."""
    tracker = Tracker(cfg)
    return [tracker.step(f) for f in frames]

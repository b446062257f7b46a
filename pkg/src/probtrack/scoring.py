"""Scoring rules for Gaussian box predictions against ground-truth boxes."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import geometry
from .probdet import EPS_REG, GaussianBox


@dataclass(frozen=True)
class ScoreReport:
    nll: float
    es: float
    sample_iou: float
    n_pairs: int
    m_samples: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def _factor(cov) -> np.ndarray:
    # eigh-based square root so a zero covariance gives exactly zero spread
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    return v * np.sqrt(np.clip(w, 0.0, None))


def draw_samples(det: GaussianBox, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` draws from the box distribution, shape ``(m, 4)``."""
    eps = rng.standard_normal((m, 4))
    return det.mean + eps @ _factor(det.sigma).T


def _check_pairs(gts, dets, m):
    if len(gts) != len(dets):
        raise ValueError(f"got {len(gts)} targets but {len(dets)} predictions")
    if len(gts) == 0:
        raise ValueError("need at least one target/prediction pair")
    if m < 2:
        raise ValueError("need at least 2 samples")


def nll(gt, det: GaussianBox) -> float:
    """Negative log density of the 4-D box Gaussian evaluated at ``gt``."""
    cov = det.sigma
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0 or not np.isfinite(logdet):
        cov = cov + EPS_REG * np.eye(4)
        sign, logdet = np.linalg.slogdet(cov)
    r = np.asarray(gt, dtype=np.float64) - det.mean
    maha = float(r @ np.linalg.solve(cov, r))
    return 0.5 * (4.0 * math.log(2.0 * math.pi) + logdet + maha)


def energy_score(gts, dets, m: int = 1000, seed: int = 0) -> float:
    """Monte-Carlo energy score, averaged over target/prediction pairs.

    Per pair, with samples ``z_1..z_m`` and target ``z``::

        mean_j |z_j - z| - sum_{j<m} |z_j - z_{j+1}| / (2 (m - 1))
    """
    _check_pairs(gts, dets, m)
    rng = np.random.default_rng(seed)
    total = 0.0
    for gt, det in zip(gts, dets):
        z = draw_samples(det, m, rng)
        first = np.linalg.norm(z - np.asarray(gt, dtype=np.float64), axis=1).mean()
        second = np.linalg.norm(z[:-1] - z[1:], axis=1).sum() / (2.0 * (m - 1))
        total += first - second
    return float(total / len(gts))


def _sorted_corners(z: np.ndarray) -> np.ndarray:
    out = z.copy()
    out[:, 0] = np.minimum(z[:, 0], z[:, 2])
    out[:, 2] = np.maximum(z[:, 0], z[:, 2])
    out[:, 1] = np.minimum(z[:, 1], z[:, 3])
    out[:, 3] = np.maximum(z[:, 1], z[:, 3])
    return out


def sample_iou_score(gts, dets, m: int = 1000, seed: int = 0) -> float:
    """Energy-score skeleton with the ``1 - IoU`` kernel on decoded boxes.

    Zero for a point mass on the target, one for a point mass disjoint from
    it. Samples with inverted corners are corner-sorted, not rejected.
    """
    _check_pairs(gts, dets, m)
    rng = np.random.default_rng(seed)
    total = 0.0
    for gt, det in zip(gts, dets):
        z = _sorted_corners(draw_samples(det, m, rng))
        first = sum(1.0 - geometry.iou(zj, gt) for zj in z) / m
        second = sum(1.0 - geometry.iou(z[j], z[j + 1]) for j in range(m - 1)) / (2.0 * (m - 1))
        total += first - second
    return float(total / len(gts))


def score_report(gts, dets, m: int = 1000, seed: int = 0) -> ScoreReport:
    """All three scores for matched pairs. Empty input gives NaN scores."""
    if len(gts) == 0:
        nan = float("nan")
        return ScoreReport(nan, nan, nan, 0, m, seed)
    return ScoreReport(
        nll=float(np.mean([nll(g, d) for g, d in zip(gts, dets)])),
        es=energy_score(gts, dets, m, seed),
        sample_iou=sample_iou_score(gts, dets, m, seed),
        n_pairs=len(gts),
        m_samples=m,
        seed=seed,
    )

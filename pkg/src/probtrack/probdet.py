"""Gaussian box detections and distribution-level operations on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from . import geometry

# 0.95 quantile of chi-square with 2 dof, -2 ln(0.05)
CHI2_2DOF_95 = float(chi2.ppf(0.95, df=2))
EPS_DET = 1e-12
EPS_REG = 1e-9
PSD_TOL = 1e-9

_TL = [0, 1]
_BR = [2, 3]


@dataclass(frozen=True, eq=False)
class GaussianBox:
    """A detection whose corners follow ``N(mean, cov)`` in tlbr layout.

    ``cov`` is ``None`` when the detector supplied no covariance; every
    distribution-level operation then treats the box as a point mass.
    """

    mean: np.ndarray
    cov: np.ndarray | None = None
    score: float = 1.0
    label: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mean", geometry.as_box(self.mean))
        if self.cov is not None:
            cov = np.asarray(self.cov, dtype=np.float64).reshape(4, 4)
            object.__setattr__(self, "cov", cov)
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")
        if self.mean[2] < self.mean[0] or self.mean[3] < self.mean[1]:
            raise ValueError(f"inverted box corners: {self.mean}")

    @property
    def has_cov(self) -> bool:
        return self.cov is not None

    @property
    def sigma(self) -> np.ndarray:
        """Covariance, zeros if absent."""
        return self.cov if self.cov is not None else np.zeros((4, 4))

    @property
    def width(self) -> float:
        return float(self.mean[2] - self.mean[0])

    @property
    def height(self) -> float:
        return float(self.mean[3] - self.mean[1])


@dataclass(frozen=True)
class CornerEllipse:
    center: np.ndarray = field(repr=False)
    a: float  # full major axis length, px
    b: float  # full minor axis length, px
    orientation: float  # radians, direction of the major axis


def symmetrize_psd(cov, tol: float = PSD_TOL) -> np.ndarray:
    """Return a symmetric PSD copy of ``cov``.

    Small negative eigenvalues (>= -tol) are clamped to zero; anything worse
    raises ``ValueError``.
    """
    cov = np.asarray(cov, dtype=np.float64)
    sym = 0.5 * (cov + cov.T)
    w, v = np.linalg.eigh(sym)
    if w.min() < -tol:
        raise ValueError(f"covariance is not PSD (min eigenvalue {w.min():.3g})")
    if w.min() < 0.0:
        sym = (v * np.clip(w, 0.0, None)) @ v.T
        sym = 0.5 * (sym + sym.T)
    return sym


def gaussian_entropy(det: GaussianBox) -> float:
    """Differential entropy (nats) of the 4-D box distribution."""
    d = max(float(np.linalg.det(det.sigma)), EPS_DET)
    return 0.5 * (4.0 * math.log(2.0 * math.pi * math.e) + math.log(d))


def _ellipse(center, block) -> CornerEllipse:
    w, v = np.linalg.eigh(block)
    w = np.clip(w, 0.0, None)
    a = 2.0 * math.sqrt(CHI2_2DOF_95 * w[1])
    b = 2.0 * math.sqrt(CHI2_2DOF_95 * w[0])
    return CornerEllipse(np.asarray(center), a, b, math.atan2(v[1, 1], v[0, 1]))


def corner_ellipses_95(det: GaussianBox) -> tuple[CornerEllipse, CornerEllipse]:
    """95% error ellipses of the top-left and bottom-right corners."""
    s = det.sigma
    tl = _ellipse(det.mean[_TL], s[np.ix_(_TL, _TL)])
    br = _ellipse(det.mean[_BR], s[np.ix_(_BR, _BR)])
    return tl, br


def passes_ellipse_filter(det: GaussianBox, tau: float) -> bool:
    w, h = det.width, det.height
    if w <= 0.0 or h <= 0.0:
        return False
    tl, br = corner_ellipses_95(det)
    return max(tl.a, br.a) <= tau * w and max(tl.b, br.b) <= tau * h


def ellipse_filter(dets, tau: float) -> list[GaussianBox]:
    """Keep detections whose corner ellipses are small relative to the box.

    Major axes are compared against ``tau * width`` and minor axes against
    ``tau * height``. Input order is preserved.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return [d for d in dets if passes_ellipse_filter(d, tau)]


def relax_box(det: GaussianBox) -> np.ndarray:
    """Enlarge a box to the outer extremities of its corner ellipses.

    The axis-aligned half-extent of a 95% ellipse along axis k is
    ``sqrt(q * var_k)``, so no eigendecomposition is needed.
    """
    var = np.clip(np.diag(det.sigma), 0.0, None)
    ext = np.sqrt(CHI2_2DOF_95 * var)
    x1, y1, x2, y2 = det.mean
    return np.array([x1 - ext[0], y1 - ext[1], x2 + ext[2], y2 + ext[3]])


def sample_stats(samples) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased sample mean and covariance of box samples, one per row."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("sample_stats needs at least 2 samples")
    mu = x.mean(axis=0)
    d = x - mu
    return mu, d.T @ d / (x.shape[0] - 1)


def _information(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=np.float64)
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        cov = cov + EPS_REG * np.eye(len(cov))
    return np.linalg.inv(cov)


def ifci_weights(infos) -> np.ndarray:
    """Improved fast covariance intersection weights.

    For information matrices ``I_i`` with total ``I = sum(I_i)``::

        w_i = (det I - det(I - I_i) + det I_i)
              / (n det I + sum_j (det I_j - det(I - I_j)))

    The weights are non-negative and sum to one by construction.
    """
    infos = [np.asarray(i, dtype=np.float64) for i in infos]
    n = len(infos)
    if n == 1:
        return np.ones(1)
    total = np.sum(infos, axis=0)
    det_total = np.linalg.det(total)
    num = np.array(
        [det_total - np.linalg.det(total - info) + np.linalg.det(info) for info in infos]
    )
    # determinants can dip below zero by rounding
    num = np.clip(num, 0.0, None)
    denom = num.sum()
    if denom <= 0.0:
        return np.full(n, 1.0 / n)
    return num / denom


def fuse_ifci(members) -> GaussianBox:
    """Fuse detections with unknown cross-correlation.

    The fused information matrix is ``sum(w_i * inv(S_i))`` with weights from
    :func:`ifci_weights`; the fused score is the highest member score.
    """
    members = list(members)
    if not members:
        raise ValueError("fuse_ifci needs at least one member")
    if len(members) == 1:
        return members[0]
    labels = {m.label for m in members}
    if len(labels) != 1:
        raise ValueError(f"cannot fuse detections with different labels {sorted(labels)}")
    infos = [_information(m.sigma) for m in members]
    w = ifci_weights(infos)
    info = sum(wi * inf for wi, inf in zip(w, infos))
    cov = np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)
    mean = cov @ sum(wi * inf @ m.mean for wi, inf, m in zip(w, infos, members))
    return GaussianBox(mean, cov, max(m.score for m in members), members[0].label)


def prob_nms_clusters(dets, iou_thr: float) -> list[list[int]]:
    """Greedy score-ordered clustering; returns member indices per cluster."""
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    claimed = [False] * len(dets)
    clusters = []
    for c in order:
        if claimed[c]:
            continue
        center = dets[c]
        members = []
        for i in order:
            if claimed[i] or dets[i].label != center.label:
                continue
            if i == c or geometry.iou(center.mean, dets[i].mean) >= iou_thr:
                members.append(i)
                claimed[i] = True
        clusters.append(members)
    return clusters


def prob_nms(dets, iou_thr: float) -> list[GaussianBox]:
    """Cluster redundant detections around NMS centers and fuse each cluster."""
    dets = list(dets)
    return [fuse_ifci([dets[i] for i in members]) for members in prob_nms_clusters(dets, iou_thr)]

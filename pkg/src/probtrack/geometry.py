"""Axis-aligned box arithmetic.

Boxes are plain float64 arrays. Two layouts are used throughout the package:

* ``tlbr``: ``[x1, y1, x2, y2]``, top-left and bottom-right corners in pixels.
* ``cah``: ``[cx, cy, a, h]``, center, aspect ratio ``w / h`` and height.
"""

from __future__ import annotations

import numpy as np

# boxes thinner than this are rejected by the cah conversion
EPS_H = 1e-3


class DegenerateBoxError(ValueError):
    """Raised when a box is too thin to express in cah coordinates."""


def as_box(box) -> np.ndarray:
    b = np.asarray(box, dtype=np.float64).reshape(4)
    if not np.all(np.isfinite(b)):
        raise ValueError(f"box has non-finite coordinates: {b}")
    return b


def area(box) -> float:
    x1, y1, x2, y2 = box
    return max(x2 - x1, 0.0) * max(y2 - y1, 0.0)


def iou(b1, b2) -> float:
    """Intersection over union of two tlbr boxes; 0 when either area is 0."""
    ix = min(b1[2], b2[2]) - max(b1[0], b2[0])
    iy = min(b1[3], b2[3]) - max(b1[1], b2[1])
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = area(b1) + area(b2) - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


def giou(b1, b2) -> float:
    """Generalized IoU: ``iou - (enclosing - union) / enclosing``."""
    ix = min(b1[2], b2[2]) - max(b1[0], b2[0])
    iy = min(b1[3], b2[3]) - max(b1[1], b2[1])
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = area(b1) + area(b2) - inter
    enclosing = (max(b1[2], b2[2]) - min(b1[0], b2[0])) * (max(b1[3], b2[3]) - min(b1[1], b2[1]))
    if enclosing <= 0.0:
        # both boxes collapse onto the same point or line
        return 0.0
    overlap = inter / union if union > 0.0 else 0.0
    return float(overlap - (enclosing - union) / enclosing)


def iou_matrix(boxes1, boxes2) -> np.ndarray:
    """Pairwise IoU, shape ``(len(boxes1), len(boxes2))``."""
    a = np.asarray(boxes1, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes2, dtype=np.float64).reshape(-1, 4)
    out = np.zeros((len(a), len(b)))
    for i in range(len(a)):
        for j in range(len(b)):
            out[i, j] = iou(a[i], b[j])
    return out


def giou_matrix(boxes1, boxes2) -> np.ndarray:
    a = np.asarray(boxes1, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes2, dtype=np.float64).reshape(-1, 4)
    out = np.zeros((len(a), len(b)))
    for i in range(len(a)):
        for j in range(len(b)):
            out[i, j] = giou(a[i], b[j])
    return out


def tlbr_to_cah(box) -> np.ndarray:
    x1, y1, x2, y2 = as_box(box)
    h = y2 - y1
    if h <= EPS_H:
        raise DegenerateBoxError(f"box height {h} is below {EPS_H} px")
    return np.array([(x1 + x2) / 2.0, (y1 + y2) / 2.0, (x2 - x1) / h, h])


def cah_to_tlbr(box) -> np.ndarray:
    cx, cy, a, h = np.asarray(box, dtype=np.float64).reshape(4)
    w = a * h
    return np.array([cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0])


def tlbr_to_tlwh(box) -> np.ndarray:
    x1, y1, x2, y2 = np.asarray(box, dtype=np.float64).reshape(4)
    return np.array([x1, y1, x2 - x1, y2 - y1])


def tlwh_to_tlbr(box) -> np.ndarray:
    x, y, w, h = np.asarray(box, dtype=np.float64).reshape(4)
    return np.array([x, y, x + w, y + h])


def cah_jacobian(box) -> np.ndarray:
    """Jacobian of the tlbr -> cah map evaluated at a tlbr box."""
    x1, y1, x2, y2 = as_box(box)
    w, h = x2 - x1, y2 - y1
    return np.array(
        [
            [0.5, 0.0, 0.5, 0.0],
            [0.0, 0.5, 0.0, 0.5],
            [-1.0 / h, w / h**2, 1.0 / h, -w / h**2],
            [0.0, -1.0, 0.0, 1.0],
        ]
    )


def tlbr_to_cah_with_cov(mean, cov) -> tuple[np.ndarray, np.ndarray]:
    """Convert a tlbr Gaussian to cah coordinates.

    The mean is mapped exactly; the covariance is propagated to first
    order, ``J @ cov @ J.T``, and symmetrized.

    Raises:
        DegenerateBoxError: if the box height is not above ``EPS_H``.
    """
    z = tlbr_to_cah(mean)
    cov = np.asarray(cov, dtype=np.float64).reshape(4, 4)
    jac = cah_jacobian(mean)
    out = jac @ cov @ jac.T
    return z, 0.5 * (out + out.T)

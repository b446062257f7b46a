"""Bipartite matching between tracks (rows) and detections (columns)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import geometry

# sentinel for pairs that may never be matched; compares greater than any cost
FORBIDDEN = np.inf


@dataclass
class Assignment:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)

    @classmethod
    def from_pairs(cls, pairs, n_rows: int, n_cols: int) -> Assignment:
        pairs = sorted(pairs)
        rows = {r for r, _ in pairs}
        cols = {c for _, c in pairs}
        return cls(
            pairs,
            [r for r in range(n_rows) if r not in rows],
            [c for c in range(n_cols) if c not in cols],
        )

    def total_cost(self, cost) -> float:
        return float(sum(cost[r, c] for r, c in self.pairs))


def _feasible(cost: np.ndarray, max_cost: float) -> np.ndarray:
    return np.isfinite(cost) & (cost <= max_cost)


def hungarian(cost, max_cost: float = np.inf) -> Assignment:
    """Optimal gated assignment.

    Among pairs with ``cost <= max_cost`` this finds a matching of maximum
    cardinality and, among those, minimum total cost. Rectangular matrices
    are fine.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n_rows, n_cols = cost.shape if cost.ndim == 2 else (0, 0)
    if n_rows == 0 or n_cols == 0:
        return Assignment.from_pairs([], n_rows, n_cols)
    ok = _feasible(cost, max_cost)
    if not ok.any():
        return Assignment.from_pairs([], n_rows, n_cols)
    vals = cost[ok]
    lo, hi = vals.min(), vals.max()
    # one infeasible pair must outweigh any set of feasible ones
    big = (min(n_rows, n_cols) + 1) * (hi - lo + 1.0)
    work = np.where(ok, cost - lo, big)
    rows, cols = linear_sum_assignment(work)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols) if ok[r, c]]
    return Assignment.from_pairs(pairs, n_rows, n_cols)


def greedy_by_priority(cost, priority, max_cost: float = np.inf) -> Assignment:
    """Greedy matching that visits columns in ascending ``priority``.

    Each column takes its cheapest remaining feasible row; a column's match
    is fixed before any later column is looked at. Ties go to the lower row
    index, and equal priorities keep column order.
    """
    cost = np.asarray(cost, dtype=np.float64)
    n_rows, n_cols = cost.shape if cost.ndim == 2 else (0, 0)
    priority = np.asarray(priority, dtype=np.float64).reshape(-1)
    if len(priority) != n_cols:
        raise ValueError(f"priority has {len(priority)} entries for {n_cols} columns")
    ok = _feasible(cost, max_cost)
    taken = np.zeros(n_rows, dtype=bool)
    pairs = []
    for c in np.argsort(priority, kind="stable"):
        candidates = np.flatnonzero(ok[:, c] & ~taken)
        if len(candidates) == 0:
            continue
        r = candidates[np.argmin(cost[candidates, c])]
        taken[r] = True
        pairs.append((int(r), int(c)))
    return Assignment.from_pairs(pairs, n_rows, n_cols)


def _label_gate(out, row_labels, col_labels):
    if row_labels is None or col_labels is None:
        return out
    mismatch = np.asarray(row_labels)[:, None] != np.asarray(col_labels)[None, :]
    out[mismatch] = FORBIDDEN
    return out


def iou_cost(tracks, dets, forbid_disjoint: bool = True, track_labels=None, det_labels=None):
    """``1 - IoU`` cost; zero-overlap and label-mismatched pairs are forbidden."""
    ious = geometry.iou_matrix(tracks, dets)
    out = 1.0 - ious
    if forbid_disjoint:
        out[ious <= 0.0] = FORBIDDEN
    return _label_gate(out, track_labels, det_labels)


def giou_cost(tracks, dets, track_labels=None, det_labels=None):
    """``1 - GIoU`` cost in ``[0, 2]``."""
    out = 1.0 - geometry.giou_matrix(tracks, dets)
    return _label_gate(out, track_labels, det_labels)

"""Constant-velocity Kalman filter over ``[cx, cy, a, h]`` and their velocities.

The baseline noise model follows the usual SORT-family convention: standard
deviations proportional to the box height with fixed position and velocity
weights. A measurement covariance supplied by the detector replaces the
baseline measurement noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probdet import EPS_REG

NDIM = 4

_F = np.eye(2 * NDIM)
_F[:NDIM, NDIM:] = np.eye(NDIM)
_H = np.eye(NDIM, 2 * NDIM)


@dataclass(frozen=True)
class KfState:
    x: np.ndarray  # [cx, cy, a, h, vcx, vcy, va, vh]
    P: np.ndarray


@dataclass(frozen=True)
class NoiseModel:
    std_weight_position: float = 1.0 / 20
    std_weight_velocity: float = 1.0 / 160

    def initial_cov(self, h: float) -> np.ndarray:
        wp, wv = self.std_weight_position, self.std_weight_velocity
        std = [2 * wp * h, 2 * wp * h, 1e-2, 2 * wp * h, 10 * wv * h, 10 * wv * h, 1e-5, 10 * wv * h]
        return np.diag(np.square(std))

    def process_cov(self, h: float) -> np.ndarray:
        wp, wv = self.std_weight_position, self.std_weight_velocity
        std = [wp * h, wp * h, 1e-2, wp * h, wv * h, wv * h, 1e-5, wv * h]
        return np.diag(np.square(std))

    def measurement_cov(self, h: float) -> np.ndarray:
        wp = self.std_weight_position
        std = [wp * h, wp * h, 1e-1, wp * h]
        return np.diag(np.square(std))


DEFAULT_NOISE = NoiseModel()


def kf_init(z, r=None, noise: NoiseModel = DEFAULT_NOISE) -> KfState:
    """Start a track at measurement ``z`` with zero velocity.

    When ``r`` is given it is added to the position block of the initial
    covariance.
    """
    z = np.asarray(z, dtype=np.float64)
    x = np.concatenate([z, np.zeros(NDIM)])
    P = noise.initial_cov(z[3])
    if r is not None:
        P[:NDIM, :NDIM] += np.asarray(r, dtype=np.float64)
    return KfState(x, P)


def kf_predict(s: KfState, noise: NoiseModel = DEFAULT_NOISE, q=None) -> KfState:
    """One constant-velocity step. ``q`` overrides the process noise."""
    Q = noise.process_cov(s.x[3]) if q is None else np.asarray(q, dtype=np.float64)
    x = _F @ s.x
    P = _F @ s.P @ _F.T + Q
    return KfState(x, P)


def kf_project(s: KfState) -> tuple[np.ndarray, np.ndarray]:
    return _H @ s.x, _H @ s.P @ _H.T


def kf_update(s: KfState, z, r=None, noise: NoiseModel = DEFAULT_NOISE) -> KfState:
    """Linear KF correction with measurement ``z`` in cah coordinates.

    ``r`` is the measurement covariance; ``None`` selects the baseline model
    scaled by the state's height.
    """
    R = noise.measurement_cov(s.x[3]) if r is None else np.asarray(r, dtype=np.float64)
    mean, S = kf_project(s)
    S = S + R
    PHt = s.P @ _H.T
    try:
        K = np.linalg.solve(S, PHt.T).T
    except np.linalg.LinAlgError:
        K = np.linalg.solve(S + EPS_REG * np.eye(NDIM), PHt.T).T
    innovation = np.asarray(z, dtype=np.float64) - mean
    x = s.x + K @ innovation
    P = s.P - K @ S @ K.T
    return KfState(x, 0.5 * (P + P.T))


def kalman_gain(s: KfState, r) -> np.ndarray:
    _, S = kf_project(s)
    return np.linalg.solve(S + r, (s.P @ _H.T).T).T

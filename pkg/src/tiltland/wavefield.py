"""Ground-truth tilt field of the landing platform.

The wave model produces a scalar tilt on a degrees scale,

    theta = A * (q_x + b) * sin(pi * (T + t + q_x)),

which is converted to radians and clamped to the mechanical range of the
platform. The squared tilt is the field the Gaussian process learns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_TILT = np.deg2rad(60.0)
MAX_TILT_RATE = np.deg2rad(135.0)
WAVE_PERIOD = 2.0


@dataclass(frozen=True)
class WaveModel:
    """Analytic spatio-temporal wave.

    Parameters
    ----------
    amplitude : float
        Gain ``A``; the formula yields degrees.
    offset : float
        Spatial offset ``b`` in meters.
    phase : float
        Temporal phase ``T`` in seconds.
    spatial_axis : int
        Index of the planar coordinate the wave travels along (0 = x).
    """

    amplitude: float = 8.0
    offset: float = 3.5
    phase: float = 5.0
    spatial_axis: int = 0

    def __post_init__(self):
        if not self.amplitude >= 0.0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.spatial_axis not in (0, 1):
            raise ValueError("spatial_axis must be 0 or 1")

    @property
    def period(self) -> float:
        return WAVE_PERIOD

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "offset": self.offset,
            "phase": self.phase,
            "spatial_axis": self.spatial_axis,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WaveModel":
        return cls(**{k: d[k] for k in ("amplitude", "offset", "phase", "spatial_axis") if k in d})


@dataclass(frozen=True)
class TiltSample:
    """Platform attitude; ``tilt`` is derived from pitch and roll."""

    pitch: float = 0.0
    roll: float = 0.0

    @property
    def tilt(self) -> float:
        return _tilt_angle(self.pitch, self.roll)


def _tilt_angle(alpha, beta) -> float:
    # arccos(cos a cos b), written with atan2 so small angles keep full precision:
    # 1 - cos^2 a cos^2 b = sin^2 a + cos^2 a sin^2 b
    ca, sa, sb = math.cos(alpha), math.sin(alpha), math.sin(beta)
    return math.atan2(math.sqrt(sa * sa + ca * ca * sb * sb), ca * math.cos(beta))


def _wave_degrees(model: WaveModel, qx, t):
    return model.amplitude * (qx + model.offset) * np.sin(np.pi * (model.phase + t + qx))


def eval_wave(model: WaveModel, q, t):
    """Tilt angle in radians at planar position ``q`` and time ``t``.

    ``q`` may be a single point or an ``(n, 2)`` array; ``t`` broadcasts.
    """
    q = np.asarray(q, dtype=float)
    qx = q[..., model.spatial_axis]
    theta = np.deg2rad(_wave_degrees(model, qx, np.asarray(t, dtype=float)))
    theta = np.clip(theta, -MAX_TILT, MAX_TILT)
    return float(theta) if np.ndim(theta) == 0 else theta


def compose_tilt(alpha: float, beta: float) -> float:
    """Angle between body and world gravity for pitch ``alpha`` and roll ``beta``."""
    half_pi = 0.5 * np.pi
    if not (abs(alpha) < half_pi and abs(beta) < half_pi):
        raise ValueError(f"pitch/roll outside (-pi/2, pi/2): {alpha}, {beta}")
    return _tilt_angle(alpha, beta)


def squared_tilt(model: WaveModel, q, t):
    """Squared tilt (rad^2), the map ``f_w`` learned by the GP."""
    theta = eval_wave(model, q, t)
    return theta * theta


def rate_limit_tilt(prev: TiltSample, target: TiltSample, dt: float,
                    max_rate: float = MAX_TILT_RATE) -> TiltSample:
    """Move ``prev`` toward ``target`` with a per-axis angular rate limit."""
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    step = max_rate * dt

    def limit(a, b):
        d = b - a
        if d > step:
            return a + step
        if d < -step:
            return a - step
        return b

    return TiltSample(limit(prev.pitch, target.pitch), limit(prev.roll, target.roll))


class AnalyticTiltMap:
    """Exact squared-tilt field exposed through the GP query interface.

    Inputs are rows ``a = (q_x, q_y, t)``. Variance is identically zero.
    Derivatives are taken w.r.t. all three inputs; the clamped region has
    zero derivative.
    """

    def __init__(self, model: WaveModel):
        self.model = model

    def _parts(self, a):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        m = self.model
        qx = a[:, m.spatial_axis]
        t = a[:, 2]
        c = np.pi / 180.0
        s = np.pi * (m.phase + t + qx)
        sin_s, cos_s = np.sin(s), np.cos(s)
        amp = m.amplitude * (qx + m.offset)
        theta = c * amp * sin_s
        # d theta / d qx and d theta / d t
        dq = c * (m.amplitude * sin_s + amp * np.pi * cos_s)
        dt = c * amp * np.pi * cos_s
        dqq = c * (2.0 * m.amplitude * np.pi * cos_s - amp * np.pi ** 2 * sin_s)
        dqt = c * (m.amplitude * np.pi * cos_s - amp * np.pi ** 2 * sin_s)
        dtt = -c * amp * np.pi ** 2 * sin_s
        free = np.abs(theta) < MAX_TILT
        return a, np.clip(theta, -MAX_TILT, MAX_TILT), dq, dt, dqq, dqt, dtt, free

    def mean(self, a):
        _, theta, *_ = self._parts(a)
        return theta * theta

    def variance(self, a):
        return np.zeros(np.atleast_2d(a).shape[0])

    def mean_gradient(self, a):
        a, theta, dq, dt, _, _, _, free = self._parts(a)
        g = np.zeros_like(a)
        ax = self.model.spatial_axis
        g[:, ax] = 2.0 * theta * dq * free
        g[:, 2] = 2.0 * theta * dt * free
        return g

    def variance_gradient(self, a):
        return np.zeros_like(np.atleast_2d(np.asarray(a, dtype=float)))

    def mean_hessian(self, a):
        a, theta, dq, dt, dqq, dqt, dtt, free = self._parts(a)
        n = a.shape[0]
        h = np.zeros((n, 3, 3))
        ax = self.model.spatial_axis
        h[:, ax, ax] = 2.0 * (dq * dq + theta * dqq) * free
        h[:, ax, 2] = h[:, 2, ax] = 2.0 * (dq * dt + theta * dqt) * free
        h[:, 2, 2] = 2.0 * (dt * dt + theta * dtt) * free
        return h

    def variance_hessian(self, a):
        n = np.atleast_2d(a).shape[0]
        return np.zeros((n, 3, 3))

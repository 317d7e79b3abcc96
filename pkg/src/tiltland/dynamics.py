"""Vehicle models and ground-truth steppers.

The multirotor is a 3-D double integrator with acceleration inputs. The
platform carrier is a unicycle (differential-drive surrogate) whose deck
tilt is driven by the wave field, not by its inputs.

State vector layouts used by the MPC prediction models:

* multirotor: ``[px, py, pz, vx, vy, vz]``, input ``[ax, ay, az]``
* platform:   ``[px, py, heading, speed]``, input ``[accel, yaw_rate]``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .wavefield import TiltSample, WaveModel, eval_wave, rate_limit_tilt


@dataclass(frozen=True)
class UavLimits:
    v_max: float = 1.0
    a_max: float = 2.0


@dataclass(frozen=True)
class PlatformLimits:
    v_max: float = 0.5
    a_max: float = 1.0
    w_max: float = 1.0
    deck_height: float = 0.5


@dataclass
class UavState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).copy()
        self.velocity = np.asarray(self.velocity, dtype=float).copy()

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.position, self.velocity])

    @classmethod
    def from_array(cls, x) -> "UavState":
        return cls(x[:3], x[3:6])


@dataclass
class PlatformState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(2))
    heading: float = 0.0
    speed: float = 0.0
    tilt: TiltSample = field(default_factory=TiltSample)

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float).copy()
        self.heading = float(self.heading)
        self.speed = float(self.speed)

    def as_array(self) -> np.ndarray:
        return np.array([self.position[0], self.position[1], self.heading, self.speed])

    @property
    def velocity(self) -> np.ndarray:
        return self.speed * np.array([np.cos(self.heading), np.sin(self.heading)])


@dataclass(frozen=True)
class RelativeState:
    """Multirotor relative to the pad center."""

    offset: np.ndarray
    velocity: np.ndarray

    @property
    def altitude(self) -> float:
        return float(self.offset[2])

    @property
    def planar_offset(self) -> np.ndarray:
        return self.offset[:2]


def _check_finite(*arrays):
    # a NaN or inf anywhere propagates into the sum
    total = 0.0
    for a in arrays:
        total += float(np.sum(a))
    if not math.isfinite(total):
        raise ValueError("non-finite state or input")


def step_uav(x: UavState, u, dt: float, limits: UavLimits = UavLimits()) -> UavState:
    """Exact zero-order-hold update of the double integrator."""
    u = np.asarray(u, dtype=float)
    _check_finite(x.position, x.velocity, u, dt)
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    p = x.position + x.velocity * dt + 0.5 * u * dt * dt
    v = np.clip(x.velocity + u * dt, -limits.v_max, limits.v_max)
    if p[2] < 0.0:
        p[2] = 0.0
        v[2] = max(v[2], 0.0)
    return UavState(p, v)


def step_platform(x: PlatformState, u, dt: float, wave: WaveModel, t: float,
                  limits: PlatformLimits = PlatformLimits()) -> PlatformState:
    """Advance the carrier one step; the deck tilt tracks the wave at ``t + dt``."""
    u = np.asarray(u, dtype=float)
    _check_finite(x.position, x.heading, x.speed, u, dt, t)
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    accel, rate = u
    heading = x.heading + rate * dt
    speed = float(np.clip(x.speed + accel * dt, -limits.v_max, limits.v_max))
    v_mid = 0.5 * (x.speed + speed)
    h_mid = x.heading + 0.5 * rate * dt
    position = x.position + v_mid * dt * np.array([np.cos(h_mid), np.sin(h_mid)])
    target = TiltSample(eval_wave(wave, position, t + dt), 0.0)
    tilt = rate_limit_tilt(x.tilt, target, dt)
    return PlatformState(position, heading, speed, tilt)


def relative_state(uav: UavState, plat: PlatformState, deck_height: float = 0.5) -> RelativeState:
    pad = np.array([plat.position[0], plat.position[1], deck_height])
    vel = uav.velocity.copy()
    vel[:2] -= plat.velocity
    return RelativeState(uav.position - pad, vel)


class DoubleIntegrator:
    """Linear prediction model for the multirotor."""

    nx = 6
    nu = 3
    linear = True

    def matrices(self, dt):
        A = np.eye(6)
        A[:3, 3:] = dt * np.eye(3)
        B = np.vstack([0.5 * dt * dt * np.eye(3), dt * np.eye(3)])
        return A, B

    def step(self, x, u, dt):
        A, B = self.matrices(dt)
        return A @ x + B @ u

    def linearize(self, x, u, dt):
        A, B = self.matrices(dt)
        return A @ x + B @ u, A, B


class Unicycle:
    """Nonlinear unicycle with midpoint heading and speed integration."""

    nx = 4
    nu = 2
    linear = False

    def step(self, x, u, dt):
        return self.linearize(x, u, dt)[0]

    def linearize(self, x, u, dt):
        px, py, th, v = x
        a, w = u
        vm = v + 0.5 * a * dt
        hm = th + 0.5 * w * dt
        c, s = np.cos(hm), np.sin(hm)
        nxt = np.array([px + vm * dt * c, py + vm * dt * s, th + w * dt, v + a * dt])
        A = np.eye(4)
        A[0, 2] = -vm * dt * s
        A[1, 2] = vm * dt * c
        A[0, 3] = dt * c
        A[1, 3] = dt * s
        A[2, 3] = 0.0
        A[3, 3] = 1.0
        B = np.zeros((4, 2))
        B[0, 0] = 0.5 * dt * dt * c
        B[1, 0] = 0.5 * dt * dt * s
        B[0, 1] = -vm * dt * s * 0.5 * dt
        B[1, 1] = vm * dt * c * 0.5 * dt
        B[2, 1] = dt
        B[3, 0] = dt
        return nxt, A, B

    def linearize_horizon(self, X, U, dt):
        """Vectorized :meth:`linearize` over rows of ``X`` (N, 4) and ``U`` (N, 2)."""
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        n = X.shape[0]
        th, v = X[:, 2], X[:, 3]
        a, w = U[:, 0], U[:, 1]
        vm = v + 0.5 * a * dt
        hm = th + 0.5 * w * dt
        c, s = np.cos(hm), np.sin(hm)
        F = np.column_stack([X[:, 0] + vm * dt * c, X[:, 1] + vm * dt * s, th + w * dt, v + a * dt])
        A = np.tile(np.eye(4), (n, 1, 1))
        A[:, 0, 2] = -vm * dt * s
        A[:, 1, 2] = vm * dt * c
        A[:, 0, 3] = dt * c
        A[:, 1, 3] = dt * s
        B = np.zeros((n, 4, 2))
        B[:, 0, 0] = 0.5 * dt * dt * c
        B[:, 1, 0] = 0.5 * dt * dt * s
        B[:, 0, 1] = -vm * dt * s * 0.5 * dt
        B[:, 1, 1] = vm * dt * c * 0.5 * dt
        B[:, 2, 1] = dt
        B[:, 3, 0] = dt
        return F, A, B

"""Landing phases and the touchdown predicate."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Optional

import numpy as np

from ..dynamics import PlatformState, RelativeState


class Phase(IntEnum):
    RENDEZVOUS = 0
    HOLD = 1
    DESCEND = 2
    TOUCHDOWN = 3
    TIMEOUT = 4


TERMINAL = (Phase.TOUCHDOWN, Phase.TIMEOUT)


class LandingStateMachine:
    """Monotone phase progression; once descending the tilt cost stays latched.

    A single update may pass through several phases; each transition is
    recorded in ``history`` as ``(time, phase)``.
    """

    def __init__(self):
        self.phase = Phase.RENDEZVOUS
        self.history = [(0.0, Phase.RENDEZVOUS)]

    @property
    def landing_possible(self) -> bool:
        return self.phase >= Phase.HOLD

    @property
    def descending(self) -> bool:
        return self.phase == Phase.DESCEND

    def _go(self, phase, t):
        self.phase = phase
        self.history.append((float(t), phase))

    def update(self, platform_converged: bool, uav_converged: bool, touchdown: bool = False,
               timeout: bool = False, t: float = 0.0) -> Phase:
        if self.phase in TERMINAL:
            return self.phase
        if touchdown:
            self._go(Phase.TOUCHDOWN, t)
            return self.phase
        if timeout:
            self._go(Phase.TIMEOUT, t)
            return self.phase
        if self.phase == Phase.RENDEZVOUS and platform_converged:
            self._go(Phase.HOLD, t)
        if self.phase == Phase.HOLD and uav_converged:
            self._go(Phase.DESCEND, t)
        return self.phase


@dataclass(frozen=True)
class TouchdownConfig:
    contact_altitude: float = 0.02
    pad_half_width: float = 0.25
    max_tilt: float = float(np.deg2rad(10.0))
    max_descent_speed: float = 0.5


@dataclass(frozen=True)
class TouchdownEvent:
    time: float
    offset: tuple
    location: tuple
    tilt: float
    descent_speed: float
    success: bool

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "offset": list(self.offset),
            "location": list(self.location),
            "tilt": self.tilt,
            "descent_speed": self.descent_speed,
            "success": self.success,
        }

    @classmethod
    def from_dict(cls, d) -> "TouchdownEvent":
        return cls(d["time"], tuple(d["offset"]), tuple(d["location"]), d["tilt"],
                   d["descent_speed"], d["success"])


def detect_touchdown(rel: RelativeState, plat: PlatformState, cfg: TouchdownConfig = TouchdownConfig(),
                     time: float = 0.0) -> Optional[TouchdownEvent]:
    """Contact event when the multirotor reaches the deck above the pad."""
    off = rel.planar_offset
    on_pad = bool(np.all(np.abs(off) <= cfg.pad_half_width))
    if rel.altitude > cfg.contact_altitude or not on_pad:
        return None
    tilt = float(plat.tilt.tilt)
    descent = float(max(-rel.velocity[2], 0.0))
    success = tilt <= cfg.max_tilt and descent <= cfg.max_descent_speed
    return TouchdownEvent(float(time), (float(off[0]), float(off[1])),
                          (float(plat.position[0]), float(plat.position[1])), tilt, descent, success)

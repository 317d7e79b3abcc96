"""Goal-exchange message bus with delay, jitter and loss.

Receivers keep only the newest goal by send time: a message that arrives
after a newer one has already been delivered is discarded.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PEER = {"uav": "platform", "platform": "uav"}


@dataclass(frozen=True)
class GoalMessage:
    sender: str
    goal: tuple
    sent_at: float
    landing_possible: bool = False

    def __post_init__(self):
        if self.sender not in PEER:
            raise ValueError(f"unknown sender {self.sender!r}")
        object.__setattr__(self, "goal", tuple(float(v) for v in self.goal))

    @property
    def goal_array(self) -> np.ndarray:
        return np.array(self.goal)


@dataclass(frozen=True)
class BusConfig:
    """``delay`` is fixed latency; each message adds ``U(0, jitter)``."""

    delay: float = 0.0
    jitter: float = 0.0
    drop_probability: float = 0.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.delay < 0.0 or self.jitter < 0.0:
            raise ValueError("delay and jitter must be >= 0")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop_probability must be in [0, 1]")


@dataclass
class MessageBus:
    config: BusConfig = field(default_factory=BusConfig)
    rng: Optional[np.random.Generator] = None
    log: list = field(default_factory=list)

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.config.seed)
        self._queue = []
        self._count = 0
        self._held = {}

    def send(self, msg: GoalMessage, now: float) -> Optional[float]:
        """Enqueue ``msg``; returns its delivery time, or ``None`` if dropped."""
        cfg = self.config
        # draw both numbers always so loss does not shift later delays
        u_drop = self.rng.random()
        u_jit = self.rng.random()
        if u_drop < cfg.drop_probability:
            self.log.append((msg.sender, msg.sent_at, None))
            return None
        at = now + cfg.delay + cfg.jitter * u_jit
        heapq.heappush(self._queue, (at, self._count, PEER[msg.sender], msg))
        self._count += 1
        self.log.append((msg.sender, msg.sent_at, at))
        return at

    def deliver(self, now: float) -> None:
        while self._queue and self._queue[0][0] <= now:
            _, _, receiver, msg = heapq.heappop(self._queue)
            held = self._held.get(receiver)
            if held is None or msg.sent_at > held.sent_at:
                self._held[receiver] = msg

    def latest(self, receiver: str, now: float) -> Optional[GoalMessage]:
        """Most recent goal delivered to ``receiver`` by time ``now``."""
        self.deliver(now)
        return self._held.get(receiver)

    @property
    def pending(self) -> int:
        return len(self._queue)


def exchange_goals(bus: MessageBus, msg: GoalMessage, now: float) -> Optional[float]:
    return bus.send(msg, now)

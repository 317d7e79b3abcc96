"""Deterministic co-simulation of one landing trial.

The plant runs at a fixed step; the multirotor and platform controllers
fire on integer multiples of it. Within a tick the multirotor solves and
publishes first, then the platform. Randomness (wave phase at start,
initial position jitter, message loss and jitter) comes from one seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ..dynamics import PlatformState, UavState, relative_state, step_platform, step_uav
from ..mpc.solver import INFEASIBLE
from ..wavefield import AnalyticTiltMap, TiltSample, WaveModel, eval_wave
from .bus import BusConfig, MessageBus
from .controllers import PlatformController, PlatformControllerConfig, UavController, UavControllerConfig
from .landing import Phase, TouchdownConfig, TouchdownEvent, detect_touchdown

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TRAJECTORY_FIELDS = (
    "t", "uav_position", "uav_velocity", "platform_position", "platform_heading",
    "platform_speed", "platform_pitch", "platform_tilt", "uav_goal", "platform_goal",
    "phase", "goal_distance",
)


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce a trial, apart from the seed.

    ``tilt_model`` is the controllers' belief about the field: ``None``
    means the analytic wave itself, otherwise a fitted GP.
    """

    wave: WaveModel = field(default_factory=WaveModel)
    platform_start: tuple = (1.5, 1.0)
    platform_heading: float = 0.0
    uav_start: tuple = (0.0, 0.0, 1.3)
    uav: UavControllerConfig = field(default_factory=UavControllerConfig)
    platform: PlatformControllerConfig = field(default_factory=PlatformControllerConfig)
    bus: BusConfig = field(default_factory=BusConfig)
    touchdown: TouchdownConfig = field(default_factory=TouchdownConfig)
    tilt_model: Optional[object] = None
    plant_dt: float = 0.005
    uav_period: float = 0.02
    platform_period: float = 0.1
    log_period: float = 0.02
    timeout: float = 60.0
    start_time: Optional[float] = None
    position_jitter: float = 0.05

    def __post_init__(self):
        if not self.plant_dt > 0.0 or not self.timeout > 0.0:
            raise ValueError("plant_dt and timeout must be positive")
        for name in ("uav_period", "platform_period", "log_period"):
            ratio = getattr(self, name) / self.plant_dt
            if ratio < 1.0 - 1e-9 or abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"{name} must be a positive multiple of plant_dt")
        if self.start_time is not None and self.start_time < 0.0:
            raise ValueError("start_time must be >= 0")
        if self.position_jitter < 0.0:
            raise ValueError("position_jitter must be >= 0")

    def every(self, period: float) -> int:
        return int(round(period / self.plant_dt))

    def to_dict(self) -> dict:
        d = asdict(replace(self, tilt_model=None))
        d["wave"] = self.wave.to_dict()
        d["tilt_model"] = _describe_tilt_model(self.tilt_model)
        return d


def _describe_tilt_model(model) -> dict:
    if model is None:
        return {"kind": "analytic"}
    payload = json.dumps(model.to_dict(), sort_keys=True).encode()
    return {"kind": "gp", "sha256": hashlib.sha256(payload).hexdigest(),
            "n_points": len(model.dataset), "hyperparams": model.hyperparams.to_dict()}


@dataclass
class TrialRecord:
    """Self-describing log of one trial; JSON round-trips exactly."""

    seed: int
    scenario: dict
    start_time: float
    outcome: str
    trajectory: dict
    phases: list
    solves: dict
    messages: dict
    touchdown: Optional[TouchdownEvent] = None
    diagnostic: str = ""
    tags: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @property
    def success(self) -> bool:
        return self.touchdown is not None and self.touchdown.success

    @property
    def duration(self) -> float:
        return float(self.trajectory["t"][-1]) if self.trajectory["t"] else 0.0

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "scenario": self.scenario,
            "start_time": self.start_time,
            "outcome": self.outcome,
            "success": self.success,
            "touchdown": self.touchdown.to_dict() if self.touchdown else None,
            "diagnostic": self.diagnostic,
            "tags": self.tags,
            "phases": self.phases,
            "messages": self.messages,
            "solves": self.solves,
            "trajectory": self.trajectory,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported trial log schema {d.get('schema_version')!r}")
        td = d.get("touchdown")
        return cls(d["seed"], d["scenario"], d["start_time"], d["outcome"], d["trajectory"],
                   d["phases"], d["solves"], d["messages"],
                   TouchdownEvent.from_dict(td) if td else None, d.get("diagnostic", ""),
                   dict(d.get("tags", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "TrialRecord":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class _Columns:
    def __init__(self, names):
        self.data = {n: [] for n in names}

    def add(self, **row):
        for k, v in row.items():
            self.data[k].append(v.tolist() if isinstance(v, np.ndarray) else v)


def _solve_row(sol, t):
    return dict(t=t, status=sol.status, iterations=sol.iterations, kkt=float(sol.kkt_residual),
                cost=float(sol.cost), track=float(sol.breakdown.get("track", 0.0)),
                coop=float(sol.breakdown.get("coop", 0.0)), tilt=float(sol.breakdown.get("tilt", 0.0)))


SOLVE_FIELDS = ("t", "status", "iterations", "kkt", "cost", "track", "coop", "tilt")


def run_trial(scenario: Scenario, seed: int = 0, tags: Optional[dict] = None) -> TrialRecord:
    """Simulate one landing attempt until touchdown, abort or timeout."""
    ss = np.random.SeedSequence(int(seed))
    init_ss, bus_ss = ss.spawn(2)
    init_rng = np.random.default_rng(init_ss)
    t0 = float(init_rng.uniform(0.0, scenario.wave.period)) if scenario.start_time is None \
        else float(scenario.start_time)
    jit = scenario.position_jitter
    d_plat = init_rng.uniform(-jit, jit, 2)
    d_uav = init_rng.uniform(-jit, jit, 2)

    tilt_map = scenario.tilt_model if scenario.tilt_model is not None else AnalyticTiltMap(scenario.wave)
    # a learned map covers one wave period, so time queries are wrapped into it
    time_period = scenario.wave.period if scenario.tilt_model is not None else None
    uav_ctrl = UavController(scenario.uav, tilt_map, time_period)
    plat_ctrl = PlatformController(scenario.platform, tilt_map)
    bus = MessageBus(scenario.bus, np.random.default_rng(bus_ss))

    p0 = np.asarray(scenario.platform_start, float) + d_plat
    plat = PlatformState(p0, scenario.platform_heading, 0.0,
                         TiltSample(eval_wave(scenario.wave, p0, t0), 0.0))
    u0 = np.asarray(scenario.uav_start, float).copy()
    u0[:2] += d_uav
    uav = UavState(u0, np.zeros(3))

    traj = _Columns(TRAJECTORY_FIELDS)
    uav_solves = _Columns(SOLVE_FIELDS)
    plat_solves = _Columns(SOLVE_FIELDS)
    dt = scenario.plant_dt
    n_uav, n_plat, n_log = scenario.every(scenario.uav_period), scenario.every(scenario.platform_period), \
        scenario.every(scenario.log_period)
    n_steps = int(round(scenario.timeout / dt))
    u_uav, u_plat = np.zeros(3), np.zeros(2)
    touchdown = None
    outcome = "timeout"
    diagnostic = ""

    def record(k):
        ug = uav_ctrl.goal if uav_ctrl.goal is not None else uav.as_array()
        pg = plat_ctrl.goal if plat_ctrl.goal is not None else plat.as_array()
        traj.add(t=k * dt, uav_position=uav.position, uav_velocity=uav.velocity,
                 platform_position=plat.position, platform_heading=plat.heading,
                 platform_speed=plat.speed, platform_pitch=float(plat.tilt.pitch),
                 platform_tilt=float(plat.tilt.tilt), uav_goal=ug, platform_goal=pg,
                 phase=int(uav_ctrl.phase), goal_distance=float(np.linalg.norm(ug[:2] - pg[:2])))

    k = 0
    for k in range(n_steps + 1):
        t = t0 + k * dt
        if k % n_uav == 0:
            out = uav_ctrl.step(t, uav, bus.latest("uav", t))
            uav_solves.add(**_solve_row(out.solution, k * dt))
            if out.solution.status == INFEASIBLE:
                outcome, diagnostic = "aborted", f"multirotor MPC infeasible at t={k * dt:.3f}"
                break
            u_uav = out.input
            bus.send(out.message, t)
        if k % n_plat == 0:
            out = plat_ctrl.step(t, plat, bus.latest("platform", t))
            plat_solves.add(**_solve_row(out.solution, k * dt))
            if out.solution.status == INFEASIBLE:
                outcome, diagnostic = "aborted", f"platform MPC infeasible at t={k * dt:.3f}"
                break
            u_plat = out.input
            bus.send(out.message, t)
        if k % n_log == 0:
            record(k)
        if k == n_steps:
            break
        uav = step_uav(uav, u_uav, dt, scenario.uav.limits)
        plat = step_platform(plat, u_plat, dt, scenario.wave, t, scenario.platform.limits)
        if uav_ctrl.landing.descending:
            touchdown = detect_touchdown(relative_state(uav, plat, scenario.uav.deck_height), plat,
                                         scenario.touchdown, (k + 1) * dt)
            if touchdown is not None:
                k += 1
                uav_ctrl.landing.update(False, False, touchdown=True, t=t0 + k * dt)
                outcome = "touchdown"
                record(k)
                break
    if outcome == "timeout":
        uav_ctrl.landing.update(False, False, timeout=True, t=t0 + k * dt)
    if outcome != "touchdown" and (not traj.data["t"] or traj.data["t"][-1] != k * dt):
        record(k)
    log.debug("trial seed=%s outcome=%s", seed, outcome)
    phases = [[round(tp - t0, 9), ph.name] for tp, ph in uav_ctrl.landing.history[1:]]
    phases.insert(0, [0.0, Phase.RENDEZVOUS.name])
    sent = bus.log
    messages = {
        "sent": {s: sum(1 for m in sent if m[0] == s) for s in ("uav", "platform")},
        "dropped": {s: sum(1 for m in sent if m[0] == s and m[2] is None) for s in ("uav", "platform")},
        "log": [[m[0], round(m[1] - t0, 9), None if m[2] is None else round(m[2] - t0, 9)] for m in sent],
    }
    return TrialRecord(int(seed), scenario.to_dict(), t0, outcome, traj.data, phases,
                       {"uav": uav_solves.data, "platform": plat_solves.data}, messages,
                       touchdown, diagnostic, dict(tags or {}))

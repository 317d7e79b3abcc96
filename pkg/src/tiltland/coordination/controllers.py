"""Per-vehicle MPC controllers.

Each controller sees only its own state snapshot and the most recent goal
delivered by the bus. It solves its goal-augmented MPC, applies the first
input and publishes the optimized goal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from ..dynamics import DoubleIntegrator, PlatformLimits, PlatformState, UavLimits, UavState, Unicycle
from ..mpc.costs import gated_tilt_term, horizon_tilt_sum, platform_tilt_cost
from ..mpc.solver import INFEASIBLE, MpcProblem, MpcSolution, MpcSolver, MpcWeights
from .bus import GoalMessage
from .landing import LandingStateMachine, Phase

HEADING_BOUND = 1e3


@dataclass(frozen=True)
class UavControllerConfig:
    """Multirotor MPC settings.

    The goal altitude is pulled towards ``hold_height`` above the deck until
    descent starts, then towards ``descent_offset`` (below the deck, so the
    commit is decisive). ``gate_height`` is the holding height inside the
    landing gate.
    """

    horizon: int = 10
    dt: float = 0.02
    q_diag: tuple = (10.0, 10.0, 10.0, 1.0, 1.0, 1.0)
    r: float = 0.1
    coop_planar: float = 50.0
    coop_altitude: float = 2.0e4
    lambda_u: float = 0.0
    hold_height: float = 0.5
    gate_height: float = 0.3
    descent_offset: float = -0.33
    eps_p: float = 0.05
    eps_goal: float = 0.05
    eps_altitude: float = 0.05
    deck_height: float = 0.5
    arena: tuple = ((-2.5, -2.5, 0.0), (2.5, 2.5, 3.0))
    state_margin: float = 0.2
    limits: UavLimits = field(default_factory=UavLimits)
    max_iter: int = 50


@dataclass(frozen=True)
class PlatformControllerConfig:
    horizon: int = 10
    dt: float = 0.2
    q_diag: tuple = (10.0, 10.0, 0.0, 1.0)
    r: float = 0.1
    coop_planar: float = 50.0
    lambda_w: float = 0.0
    lambda_v: float = 0.0
    period: float = 2.0
    n_samples: int = 20
    eps_q: float = 0.05
    eps_goal: float = 0.05
    arena: tuple = ((-2.0, -2.0), (2.0, 2.0))
    state_margin: float = 0.2
    limits: PlatformLimits = field(default_factory=PlatformLimits)
    max_iter: int = 50


class ControlOutput(NamedTuple):
    input: np.ndarray
    message: GoalMessage
    solution: MpcSolution


class UavController:
    """Multirotor side: tracks the platform's proposed landing site and owns
    the landing phase machine."""

    def __init__(self, config: UavControllerConfig = UavControllerConfig(), tilt_map=None,
                 time_period: Optional[float] = None):
        self.config = c = config
        self.tilt_map = tilt_map
        self.time_period = time_period
        self.model = DoubleIntegrator()
        self.solver = MpcSolver()
        self.landing = LandingStateMachine()
        lo, hi = np.asarray(c.arena[0], float), np.asarray(c.arena[1], float)
        v = c.limits.v_max
        m = c.state_margin
        self.goal_bounds = (np.r_[lo, 0, 0, 0], np.r_[hi, 0, 0, 0])
        self.x_bounds = (np.r_[lo[:2] - m, 0.0, -v, -v, -v], np.r_[hi + m, v, v, v])
        self.u_bounds = (-c.limits.a_max * np.ones(3), c.limits.a_max * np.ones(3))
        self.Q = np.diag(c.q_diag)
        self.R = c.r * np.eye(3)
        self.goal = None
        self._warm = None
        self._last_t = None
        self.last_tilt_sum = 0.0

    @property
    def phase(self) -> Phase:
        return self.landing.phase

    def _target_altitude(self):
        c = self.config
        off = c.descent_offset if self.landing.descending else c.hold_height
        return c.deck_height + off

    def _converged(self, x, peer: Optional[GoalMessage]) -> bool:
        c = self.config
        if peer is None or self.goal is None:
            return False
        pg = peer.goal_array
        return (np.linalg.norm(x[:2] - self.goal[:2]) < c.eps_p
                and np.linalg.norm(self.goal[:2] - pg[:2]) < c.eps_goal
                and abs(x[2] - c.deck_height - c.hold_height) < c.eps_altitude)

    def step(self, t: float, state: UavState, peer: Optional[GoalMessage]) -> ControlOutput:
        c = self.config
        x = state.as_array()
        self.landing.update(bool(peer is not None and peer.landing_possible),
                            self._converged(x, peer), t=t)
        target = np.zeros(6)
        W = np.zeros(6)
        W[2] = c.coop_altitude
        target[2] = self._target_altitude()
        if peer is not None:
            pg = peer.goal_array
            target[:2] = pg[:2]
            W[:2] = c.coop_planar
        else:
            target[:2] = x[:2]
        tilt = None
        if self.landing.descending and c.lambda_u > 0.0 and self.tilt_map is not None and peer is not None:
            # predicted squared tilt at the proposed site does not depend on our goal
            s = horizon_tilt_sum(self.tilt_map, peer.goal_array[:2], t, c.dt, c.horizon, self.time_period)
            self.last_tilt_sum = s
            lam, hd, deck = c.lambda_u, c.gate_height, c.deck_height
            tilt = lambda g: gated_tilt_term(g, s, lam, hd, deck)
        problem = MpcProblem(self.model, c.horizon, c.dt, x, target,
                             MpcWeights(self.Q, self.R, np.diag(W), lambda_u=c.lambda_u),
                             self.x_bounds, self.u_bounds, self.goal_bounds, tilt, max_iter=c.max_iter)
        warm = None
        if self._warm is not None and self._warm.status != INFEASIBLE:
            warm = self._warm.shifted(t - self._last_t)
        sol = self.solver.solve(problem, warm)
        self._warm, self._last_t = sol, t
        if sol.status != INFEASIBLE:
            self.goal = sol.goal.copy()
            u = sol.inputs[0].copy()
        else:
            u = np.zeros(3)
        goal = self.goal if self.goal is not None else x
        return ControlOutput(u, GoalMessage("uav", goal, t), sol)


class PlatformController:
    """Platform side: picks a low-tilt landing site near the multirotor's goal
    and announces when it has arrived."""

    def __init__(self, config: PlatformControllerConfig = PlatformControllerConfig(), tilt_map=None):
        self.config = c = config
        self.tilt_map = tilt_map
        self.model = Unicycle()
        self.solver = MpcSolver()
        lo, hi = np.asarray(c.arena[0], float), np.asarray(c.arena[1], float)
        v = c.limits.v_max
        m = c.state_margin
        self.x_bounds = (np.r_[lo - m, -HEADING_BOUND, -v], np.r_[hi + m, HEADING_BOUND, v])
        self.u_bounds = (np.array([-c.limits.a_max, -c.limits.w_max]),
                         np.array([c.limits.a_max, c.limits.w_max]))
        self._plane = (lo, hi)
        self.Q = np.diag(c.q_diag)
        self.R = c.r * np.eye(2)
        self.goal = None
        self.landing_possible = False
        self._warm = None
        self._last_t = None

    def _converged(self, x, peer: Optional[GoalMessage]) -> bool:
        c = self.config
        if peer is None or self.goal is None:
            return False
        return (np.linalg.norm(x[:2] - self.goal[:2]) < c.eps_q
                and np.linalg.norm(self.goal[:2] - peer.goal_array[:2]) < c.eps_goal)

    def step(self, t: float, state: PlatformState, peer: Optional[GoalMessage]) -> ControlOutput:
        c = self.config
        x = state.as_array()
        if not self.landing_possible and self._converged(x, peer):
            self.landing_possible = True
        lo, hi = self._plane
        # speed goal pinned to rest; heading carries no cost so it is fixed too
        goal_bounds = (np.r_[lo, x[2], 0.0], np.r_[hi, x[2], 0.0])
        target = np.zeros(4)
        W = np.zeros(4)
        if peer is not None:
            target[:2] = peer.goal_array[:2]
            W[:2] = c.coop_planar
        tilt = tilt_value = None
        if (c.lambda_w > 0.0 or c.lambda_v > 0.0) and self.tilt_map is not None:
            tm, per, ns, lw, lv = self.tilt_map, c.period, c.n_samples, c.lambda_w, c.lambda_v
            tilt = lambda g: platform_tilt_cost(g, tm, per, ns, lw, lv)
            tilt_value = lambda g: platform_tilt_cost(g, tm, per, ns, lw, lv, derivatives=False).value
        problem = MpcProblem(self.model, c.horizon, c.dt, x, target,
                             MpcWeights(self.Q, self.R, np.diag(W), lambda_w=c.lambda_w, lambda_v=c.lambda_v),
                             self.x_bounds, self.u_bounds, goal_bounds, tilt, max_iter=c.max_iter,
                             tilt_value=tilt_value)
        warm = None
        if self._warm is not None and self._warm.status != INFEASIBLE:
            warm = self._warm.shifted(t - self._last_t)
            warm.goal[2] = x[2]
        sol = self.solver.solve(problem, warm)
        self._warm, self._last_t = sol, t
        if sol.status != INFEASIBLE:
            self.goal = sol.goal.copy()
            u = sol.inputs[0].copy()
        else:
            u = np.zeros(2)
        goal = self.goal if self.goal is not None else x
        return ControlOutput(u, GoalMessage("platform", goal, t, self.landing_possible), sol)

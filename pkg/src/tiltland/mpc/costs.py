"""Cost library for the goal-augmented MPC.

Tracking and cooperation terms are quadratic. The tilt terms depend on
the artificial goal only, through queries of a tilt map (the GP posterior
or the analytic field), and return value, gradient and Hessian w.r.t. the
goal vector.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

GATE_SWITCH = 0.16
GATE_SLOPE_HIGH = 0.15
GATE_SLOPE_LOW = 0.01


class CostTerm(NamedTuple):
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def tracking_cost(xs, us, goal, Q, R) -> float:
    """Quadratic tracking cost over ``x_1..x_N``; ``xs`` includes ``x_0``."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    us = np.atleast_2d(np.asarray(us, dtype=float))
    if xs.shape[0] != us.shape[0] + 1:
        raise ValueError("expected len(xs) == len(us) + 1")
    D = xs[1:] - np.asarray(goal, dtype=float)
    Q = np.atleast_2d(Q)
    R = np.atleast_2d(R)
    return float(np.einsum("ki,ij,kj->", D, Q, D) + np.einsum("ki,ij,kj->", us, R, us))


def cooperation_cost(own_goal, peer_goal, W) -> float:
    d = np.asarray(own_goal, dtype=float) - np.asarray(peer_goal, dtype=float)
    return float(d @ np.atleast_2d(W) @ d)


def _sigmoid(z):
    # numerically safe logistic
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


def landing_gate(e_g: float, h_d: float) -> float:
    """Piecewise logistic of the goal altitude error.

    Above the switch altitude the gate decays with altitude around the
    holding height; below it the gate is essentially closed.
    """
    if e_g >= GATE_SWITCH:
        return _sigmoid(-(e_g - h_d) / GATE_SLOPE_HIGH)
    return _sigmoid((e_g - h_d) / GATE_SLOPE_LOW)


def landing_gate_derivatives(e_g: float, h_d: float):
    """``(h, dh/de, d2h/de2)`` on the branch containing ``e_g``."""
    h = landing_gate(e_g, h_d)
    k = -1.0 / GATE_SLOPE_HIGH if e_g >= GATE_SWITCH else 1.0 / GATE_SLOPE_LOW
    d1 = k * h * (1.0 - h)
    d2 = k * d1 * (1.0 - 2.0 * h)
    return h, d1, d2


def platform_tilt_cost(goal, tilt_map, period: float, n_samples: int,
                       lambda_w: float, lambda_v: float,
                       position_index=(0, 1), derivatives: bool = True) -> CostTerm:
    """Weighted sum of predicted squared tilt and its variance over one period.

    Queries sit at the goal's planar position and times
    ``period * j / n_samples`` for ``j = 0..n_samples``. With
    ``derivatives=False`` the gradient and Hessian are returned as zeros.
    """
    goal = np.asarray(goal, dtype=float)
    n = goal.size
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    if lambda_w == 0.0 and lambda_v == 0.0:
        return CostTerm(0.0, grad, hess)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    idx = list(position_index)
    times = period * np.arange(n_samples + 1) / n_samples
    a = np.empty((times.size, 3))
    a[:, 0] = goal[idx[0]]
    a[:, 1] = goal[idx[1]]
    a[:, 2] = times
    value = 0.0
    ix = np.ix_(idx, idx)
    if lambda_w:
        value += lambda_w * float(np.sum(tilt_map.mean(a)))
        if derivatives:
            grad[idx] += lambda_w * tilt_map.mean_gradient(a)[:, :2].sum(0)
            hess[ix] += lambda_w * tilt_map.mean_hessian(a)[:, :2, :2].sum(0)
    if lambda_v:
        value += lambda_v * float(np.sum(tilt_map.variance(a)))
        if derivatives:
            grad[idx] += lambda_v * tilt_map.variance_gradient(a)[:, :2].sum(0)
            hess[ix] += lambda_v * tilt_map.variance_hessian(a)[:, :2, :2].sum(0)
    return CostTerm(value, grad, hess)


def horizon_tilt_sum(tilt_map, site, t0: float, dt: float, horizon: int, time_period=None) -> float:
    """Sum of predicted squared tilt at ``site`` for ``t0 + dt*k``, ``k = 1..horizon``."""
    times = t0 + dt * np.arange(1, horizon + 1)
    if time_period:
        times = np.mod(times, time_period)
    a = np.empty((horizon, 3))
    a[:, 0] = site[0]
    a[:, 1] = site[1]
    a[:, 2] = times
    return float(np.sum(tilt_map.mean(a)))


def uav_tilt_cost(uav_goal, platform_goal, tilt_map, t0: float, dt: float, horizon: int,
                  lambda_u: float, h_d: float, active: bool, pad_altitude: float = 0.5,
                  altitude_index: int = 2, time_period=None) -> CostTerm:
    """Gate-weighted predicted tilt at the platform's proposed landing site.

    ``platform_goal`` is in platform coordinates (planar position first); its
    altitude is the pad altitude. Only the multirotor goal altitude enters,
    through the landing gate.
    """
    uav_goal = np.asarray(uav_goal, dtype=float)
    n = uav_goal.size
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    if not active or lambda_u == 0.0:
        return CostTerm(0.0, grad, hess)
    total = horizon_tilt_sum(tilt_map, platform_goal, t0, dt, horizon, time_period)
    return gated_tilt_term(uav_goal, total, lambda_u, h_d, pad_altitude, altitude_index)


def gated_tilt_term(uav_goal, tilt_sum, lambda_u, h_d, pad_altitude=0.5, altitude_index=2) -> CostTerm:
    n = uav_goal.size
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    e_g = uav_goal[altitude_index] - pad_altitude
    h, d1, d2 = landing_gate_derivatives(e_g, h_d)
    scale = lambda_u * tilt_sum
    grad[altitude_index] = scale * d1
    hess[altitude_index, altitude_index] = scale * d2
    return CostTerm(scale * h, grad, hess)

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiltland.gp import GpDataset, GpHyperparams, GpModel
from tiltland.mpc.costs import (GATE_SWITCH, cooperation_cost, gated_tilt_term, horizon_tilt_sum, landing_gate,
                                landing_gate_derivatives, platform_tilt_cost, tracking_cost, uav_tilt_cost)
from tiltland.wavefield import AnalyticTiltMap, WaveModel


def test_tracking_cost_examples():
    assert tracking_cost([[0.0], [3.0]], [[1.0]], [0.0], [[2.0]], [[1.0]]) == pytest.approx(19.0)
    g = np.array([1.0, 2.0])
    assert tracking_cost(np.tile(g, (4, 1)), np.zeros((3, 2)), g, np.eye(2), np.eye(2)) == 0.0
    xs, us = np.random.default_rng(0).normal(size=(4, 2)), np.zeros((3, 2))
    assert tracking_cost(xs, us, g, 2 * np.eye(2), np.eye(2)) == \
        pytest.approx(2 * tracking_cost(xs, us, g, np.eye(2), np.eye(2)))
    with pytest.raises(ValueError):
        tracking_cost(np.zeros((3, 2)), np.zeros((3, 2)), g, np.eye(2), np.eye(2))


def test_cooperation_cost_examples():
    assert cooperation_cost([1.0, 2.0], [0.0, 0.0], np.eye(2)) == pytest.approx(5.0)
    assert cooperation_cost([0.3, 0.1], [0.3, 0.1], np.eye(2)) == 0.0
    W = np.diag([2.0, 3.0])
    assert cooperation_cost([1.0, 2.0], [0.5, -1.0], W) == cooperation_cost([0.5, -1.0], [1.0, 2.0], W)


def gate_oracle(e, hd):
    if e >= 0.16:
        return 1.0 / (1.0 + math.exp((e - hd) / 0.15))
    return 1.0 / (1.0 + math.exp(-(e - hd) / 0.01))


def test_landing_gate_examples():
    assert landing_gate(0.5, 0.5) == pytest.approx(0.5, abs=1e-15)
    assert landing_gate(0.05, 0.5) < 1e-19
    assert landing_gate(0.3, 0.5) == pytest.approx(gate_oracle(0.3, 0.5), abs=1e-15)
    assert landing_gate(0.3, 0.5) == pytest.approx(0.7914, abs=1e-4)


@given(st.floats(-5, 5), st.floats(0.17, 1.0))
def test_landing_gate_in_unit_interval_and_matches_literal_form(e, hd):
    h = landing_gate(e, hd)
    assert 0.0 <= h <= 1.0
    assert h == pytest.approx(gate_oracle(e, hd), abs=1e-15)


def test_gate_high_branch_strictly_decreasing():
    e = np.linspace(GATE_SWITCH, 3.0, 1000)
    h = np.array([landing_gate(v, 0.3) for v in e])
    assert np.all(np.diff(h) < 0)


@pytest.mark.parametrize("e", [-0.2, 0.1, 0.2, 0.3, 0.7])
def test_gate_derivatives(e):
    h, d1, d2 = landing_gate_derivatives(e, 0.3)
    eps = 1e-6
    assert d1 == pytest.approx((landing_gate(e + eps, 0.3) - landing_gate(e - eps, 0.3)) / (2 * eps), rel=1e-6)
    fd2 = (landing_gate_derivatives(e + eps, 0.3)[1] - landing_gate_derivatives(e - eps, 0.3)[1]) / (2 * eps)
    assert d2 == pytest.approx(fd2, rel=1e-5, abs=1e-9)


def constant_gp(points, c):
    return GpModel(GpDataset(points, np.full(len(points), c)), GpHyperparams(1.0, 0.0, (0.5, 0.5, 0.5)))


def test_platform_cost_zero_weights():
    tm = AnalyticTiltMap(WaveModel(8.0))
    term = platform_tilt_cost(np.array([0.3, 0.2, 0.0, 0.0]), tm, 2.0, 20, 0.0, 0.0)
    assert term.value == 0.0 and not term.gradient.any()


def test_platform_cost_constant_field():
    goal = np.array([0.2, 0.7, 0.0, 0.0])
    times = 2.0 * np.arange(21) / 20
    pts = np.column_stack([np.full(21, 0.2), np.full(21, 0.7), times])
    term = platform_tilt_cost(goal, constant_gp(pts, 0.04), 2.0, 20, 3.0, 0.0)
    assert term.value == pytest.approx(3.0 * 21 * 0.04, rel=1e-8)


def test_platform_cost_prefers_node_to_antinode():
    # time-averaged squared tilt grows with the amplitude factor (q_x + b)
    tm = AnalyticTiltMap(WaveModel(8.0))
    at = lambda x: platform_tilt_cost(np.array([x, 0.0, 0.0, 0.0]), tm, 2.0, 20, 1.0, 0.0).value
    assert at(-1.0) < at(0.5)


@pytest.mark.parametrize("seed", range(3))
def test_platform_cost_gradient(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (20, 3))
    gp = GpModel(GpDataset(X, rng.uniform(0, 0.3, 20)), GpHyperparams(0.1, 1e-3, (0.4, 0.6, 0.5)))
    goal = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.3, 0.0])
    term = platform_tilt_cost(goal, gp, 2.0, 20, 5.0, 7.0)
    h = 1e-6
    for i in range(2):
        e = np.zeros(4)
        e[i] = h
        fd = (platform_tilt_cost(goal + e, gp, 2.0, 20, 5.0, 7.0).value
              - platform_tilt_cost(goal - e, gp, 2.0, 20, 5.0, 7.0).value) / (2 * h)
        assert term.gradient[i] == pytest.approx(fd, rel=1e-5, abs=1e-9)
        fdg = (platform_tilt_cost(goal + e, gp, 2.0, 20, 5.0, 7.0).gradient
               - platform_tilt_cost(goal - e, gp, 2.0, 20, 5.0, 7.0).gradient) / (2 * h)
        np.testing.assert_allclose(term.hessian[i], fdg, rtol=1e-4, atol=1e-7)
    assert term.gradient[2:].tolist() == [0.0, 0.0]
    fast = platform_tilt_cost(goal, gp, 2.0, 20, 5.0, 7.0, derivatives=False)
    assert fast.value == term.value


def test_uav_cost_inactive_and_zero_field():
    tm = AnalyticTiltMap(WaveModel(8.0))
    g = np.array([0.0, 0.0, 0.9, 0, 0, 0])
    assert uav_tilt_cost(g, [0.3, 0.1], tm, 0.0, 0.02, 10, 1e5, 0.3, active=False).value == 0.0
    flat = AnalyticTiltMap(WaveModel(0.0))
    assert uav_tilt_cost(g, [0.3, 0.1], flat, 0.0, 0.02, 10, 1e5, 0.3, active=True).value == 0.0


def test_uav_cost_constant_field_and_monotone():
    times = 0.4 + 0.02 * np.arange(1, 11)
    pts = np.column_stack([np.full(10, 0.3), np.full(10, 0.1), times])
    gp = constant_gp(pts, 0.05)
    vals = []
    for z in np.linspace(0.5 + 0.31, 2.0, 50):
        g = np.array([0.0, 0.0, z, 0, 0, 0])
        term = uav_tilt_cost(g, [0.3, 0.1], gp, 0.4, 0.02, 10, 2.0, 0.3, active=True)
        assert term.value == pytest.approx(2.0 * 10 * 0.05 * landing_gate(z - 0.5, 0.3), rel=1e-8)
        vals.append(term.value)
    assert np.all(np.diff(vals) < 0)


def test_gated_term_gradient():
    g = np.array([0.1, 0.2, 0.85, 0, 0, 0])
    t = gated_tilt_term(g, 3.0, 2.0, 0.3)
    h = 1e-7
    e = np.zeros(6)
    e[2] = h
    fd = (gated_tilt_term(g + e, 3.0, 2.0, 0.3).value - gated_tilt_term(g - e, 3.0, 2.0, 0.3).value) / (2 * h)
    assert t.gradient[2] == pytest.approx(fd, rel=1e-6)


def test_horizon_sum_wraps_time():
    tm = AnalyticTiltMap(WaveModel(8.0))
    a = horizon_tilt_sum(tm, [0.2, 0.0], 1.95, 0.02, 10, time_period=2.0)
    b = horizon_tilt_sum(tm, [0.2, 0.0], 1.95, 0.02, 10)
    assert a == pytest.approx(b, rel=1e-12)

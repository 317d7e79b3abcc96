import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from tiltland.wavefield import (MAX_TILT, AnalyticTiltMap, TiltSample, WaveModel, compose_tilt, eval_wave,
                                rate_limit_tilt, squared_tilt)

angles = st.floats(-1.5, 1.5, allow_nan=False)


def scalar_wave_deg(A, b, T, qx, t):
    return A * (qx + b) * math.sin(math.pi * (T + t + qx))


def test_zero_at_integer_phase():
    assert eval_wave(WaveModel(8.0), (0.0, 0.0), 0.0) == pytest.approx(0.0, abs=1e-15)


def test_calm_wave_at_half_second():
    # sin(5.5 pi) = -1, so the tilt is a trough of 2.3 * 3.5 = 8.05 degrees
    got = eval_wave(WaveModel(2.3), (0.0, 0.0), 0.5)
    assert got == pytest.approx(math.radians(scalar_wave_deg(2.3, 3.5, 5.0, 0.0, 0.5)), abs=1e-15)
    assert got == pytest.approx(math.radians(-8.05), abs=1e-12)


def test_harsh_squared_tilt_at_half_second():
    assert squared_tilt(WaveModel(8.0), (0.0, 0.0), 0.5) == pytest.approx(math.radians(28.0) ** 2, rel=1e-12)
    assert squared_tilt(WaveModel(8.0), (0.0, 0.0), 0.5) == pytest.approx(0.2388, abs=1e-4)


@pytest.mark.parametrize("A", [2.3, 8.0])
def test_matches_scalar_formula_on_grid(A):
    qx, t = np.meshgrid(np.linspace(-2, 2, 41), np.linspace(0, 4, 51), indexing="ij")
    q = np.stack([qx.ravel(), np.zeros(qx.size)], axis=1)
    got = eval_wave(WaveModel(A), q, t.ravel())
    want = [math.radians(scalar_wave_deg(A, 3.5, 5.0, a, b)) for a, b in zip(qx.ravel(), t.ravel())]
    np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 50))
def test_two_second_period(qx, qy, t):
    w = WaveModel(8.0)
    assert eval_wave(w, (qx, qy), t + 2.0) == pytest.approx(eval_wave(w, (qx, qy), t), abs=1e-12)


def test_clamped_to_mechanical_range():
    w = WaveModel(30.0)
    t = np.linspace(0, 2, 401)
    theta = eval_wave(w, np.tile([1.0, 0.0], (t.size, 1)), t)
    assert np.abs(theta).max() == pytest.approx(MAX_TILT)


def test_spatial_axis_selects_coordinate():
    assert eval_wave(WaveModel(8.0, spatial_axis=1), (0.3, 0.7), 0.2) == \
        eval_wave(WaveModel(8.0), (0.7, 0.3), 0.2)


def test_wave_model_validation_and_round_trip():
    with pytest.raises(ValueError):
        WaveModel(-1.0)
    with pytest.raises(ValueError):
        WaveModel(spatial_axis=2)
    w = WaveModel(2.3, 3.0, 4.0, 1)
    assert WaveModel.from_dict(w.to_dict()) == w


def test_compose_identity_and_example():
    assert compose_tilt(0.0, 0.0) == 0.0
    body_z = Rotation.from_euler("yx", [0.3, 0.4]).apply([0.0, 0.0, 1.0])
    assert compose_tilt(0.3, 0.4) == pytest.approx(math.acos(body_z[2]), abs=1e-12)
    assert compose_tilt(0.3, 0.4) == pytest.approx(0.495096, abs=1e-6)


@given(angles, angles)
def test_compose_symmetric_and_dominates(a, b):
    assert compose_tilt(a, b) == pytest.approx(compose_tilt(b, a), abs=1e-12)
    assert compose_tilt(a, b) >= max(abs(a), abs(b)) - 1e-12


@pytest.mark.parametrize("bad", [(math.pi / 2, 0.0), (0.0, -math.pi / 2), (2.0, 0.1)])
def test_compose_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        compose_tilt(*bad)


def test_tilt_sample_uses_composition():
    assert TiltSample(0.3, 0.4).tilt == pytest.approx(compose_tilt(0.3, 0.4), abs=1e-15)
    assert TiltSample(-0.2, 0.0).tilt == pytest.approx(0.2, abs=1e-15)


@given(st.floats(-2, 2), st.floats(0, 4))
def test_squared_tilt_nonnegative_and_zero_with_wave(qx, t):
    w = WaveModel(8.0)
    v = squared_tilt(w, (qx, 0.0), t)
    assert v >= 0.0
    assert (v == 0.0) == (eval_wave(w, (qx, 0.0), t) == 0.0)


def test_rate_limit_examples():
    p = TiltSample(0.1, -0.2)
    assert rate_limit_tilt(p, p, 0.01) == p
    out = rate_limit_tilt(TiltSample(0.0, 0.0), TiltSample(math.radians(90.0), 0.0), 0.1)
    assert out.pitch == pytest.approx(math.radians(13.5), abs=1e-15)
    target = TiltSample(0.01, -0.01)
    assert rate_limit_tilt(TiltSample(0.0, 0.0), target, 0.1) == target
    with pytest.raises(ValueError):
        rate_limit_tilt(p, p, 0.0)


def _fd_grad(f, a, h=1e-6):
    g = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        g[i] = (f(a + e) - f(a - e)) / (2 * h)
    return g


@pytest.mark.parametrize("seed", range(5))
def test_analytic_map_derivatives(seed):
    rng = np.random.default_rng(seed)
    tm = AnalyticTiltMap(WaveModel(8.0))
    a = np.array([rng.uniform(-1.5, 1.5), rng.uniform(-1, 1), rng.uniform(0, 2)])
    g = tm.mean_gradient(a)[0]
    np.testing.assert_allclose(g, _fd_grad(lambda x: tm.mean(x)[0], a), rtol=1e-6, atol=1e-9)
    H = tm.mean_hessian(a)[0]
    Hfd = np.array([_fd_grad(lambda x: tm.mean_gradient(x)[0][i], a) for i in range(3)])
    np.testing.assert_allclose(H, Hfd, rtol=1e-5, atol=1e-7)
    assert tm.variance(a)[0] == 0.0
    assert tm.mean(a)[0] == pytest.approx(squared_tilt(tm.model, a[:2], a[2]), rel=1e-14)

import cvxpy as cp
import numpy as np
import pytest

from tiltland.mpc.qp import solve_qp, solve_unconstrained


def oracle(H, c, C, d):
    z = cp.Variable(c.size)
    prob = cp.Problem(cp.Minimize(0.5 * cp.quad_form(z, cp.psd_wrap(H)) + c @ z), [C @ z <= d])
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-12, tol_gap_rel=1e-12, tol_feas=1e-12)
    return z.value, prob.value


@pytest.mark.parametrize("seed", range(12))
def test_matches_generic_solver(seed):
    rng = np.random.default_rng(seed)
    n, m = int(rng.integers(2, 12)), int(rng.integers(1, 30))
    M = rng.normal(size=(n, n))
    H = M @ M.T + 0.1 * np.eye(n)
    c = rng.normal(size=n) * 3
    C = rng.normal(size=(m, n))
    d = rng.uniform(0.1, 1.0, m)  # z = 0 is strictly feasible
    res = solve_qp(H, c, C, d)
    z_ref, f_ref = oracle(H, c, C, d)
    assert res.converged
    np.testing.assert_allclose(res.z, z_ref, atol=1e-6)
    assert 0.5 * res.z @ H @ res.z + c @ res.z == pytest.approx(f_ref, abs=1e-7)
    assert np.all(res.multipliers >= 0)
    assert np.all(C @ res.z <= d + 1e-8)


def test_no_constraints_is_newton_step(rng):
    H = np.diag([2.0, 4.0])
    c = np.array([-2.0, 8.0])
    np.testing.assert_allclose(solve_qp(H, c, np.zeros((0, 2)), np.zeros(0)).z, [1.0, -2.0])
    np.testing.assert_allclose(solve_unconstrained(H, c), [1.0, -2.0])


def test_box_projection_for_identity_hessian():
    c = np.array([-3.0, 0.2, 5.0])
    C = np.vstack([np.eye(3), -np.eye(3)])
    d = np.ones(6)
    res = solve_qp(np.eye(3), c, C, d)
    np.testing.assert_allclose(res.z, np.clip(-c, -1, 1), atol=1e-8)

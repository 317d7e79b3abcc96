"""Dense convex QP solver used inside the SQP iterations.

Solves ``min 0.5 z'Hz + c'z  s.t.  Cz <= d`` with a primal-dual
interior-point method (Mehrotra predictor-corrector). Problems here are
small (tens of variables, a few hundred rows), so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass
class QpResult:
    z: np.ndarray
    multipliers: np.ndarray
    iterations: int
    converged: bool


def _solve_spd(M, rhs):
    try:
        return cho_solve(cho_factor(M, check_finite=False), rhs, check_finite=False)
    except np.linalg.LinAlgError:
        return np.linalg.solve(M + 1e-10 * np.eye(M.shape[0]) * max(1.0, np.abs(M).max()), rhs)


def solve_unconstrained(H, c):
    return _solve_spd(H, -c)


def solve_qp(H, c, C, d, tol=1e-9, max_iter=60) -> QpResult:
    n = c.size
    m = d.size
    if m == 0:
        return QpResult(solve_unconstrained(H, c), np.zeros(0), 0, True)
    z = np.zeros(n)
    s = np.maximum(d - C @ z, 1.0)
    lam = np.ones(m)
    scale = max(1.0, np.abs(c).max(), np.abs(d).max())
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r_d = H @ z + c + C.T @ lam
        r_p = C @ z + s - d
        mu = s @ lam / m
        # worst-case complementarity, not the average: one loose active row
        # is enough to bias the solution
        if (np.abs(r_d).max() < tol * scale and np.abs(r_p).max() < tol * scale
                and np.max(s * lam) < tol * scale):
            converged = True
            break
        w = lam / s
        M = H + (C.T * w) @ C
        try:
            fac = cho_factor(M, check_finite=False)
            solve = lambda rhs: cho_solve(fac, rhs, check_finite=False)
        except np.linalg.LinAlgError:
            Mr = M + 1e-12 * max(1.0, np.abs(M).max()) * np.eye(n)
            solve = lambda rhs: np.linalg.solve(Mr, rhs)

        def direction(r_c):
            # r_c is the complementarity residual s*lam - sigma*mu (+ corrector)
            rhs = -r_d - C.T @ ((-r_c + lam * r_p) / s)
            dz = solve(rhs)
            ds = -r_p - C @ dz
            dl = (-r_c - lam * ds) / s
            return dz, ds, dl

        # predictor
        dz, ds, dl = direction(s * lam)
        a_p = _max_step(s, ds)
        a_d = _max_step(lam, dl)
        mu_aff = (s + a_p * ds) @ (lam + a_d * dl) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        # corrector
        dz, ds, dl = direction(s * lam + ds * dl - sigma * mu)
        a_p = min(1.0, 0.995 * _max_step(s, ds, 1e30))
        a_d = min(1.0, 0.995 * _max_step(lam, dl, 1e30))
        z = z + a_p * dz
        s = s + a_p * ds
        lam = lam + a_d * dl
    return QpResult(z, lam, it, converged)


def _max_step(v, dv, cap=1.0):
    neg = dv < 0
    if not np.any(neg):
        return cap
    return min(cap, float(np.min(-v[neg] / dv[neg])))

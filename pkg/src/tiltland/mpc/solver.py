"""Multiple-shooting SQP for the goal-augmented MPC.

Decision variables are the predicted states ``x_1..x_N``, inputs
``u_0..u_{N-1}`` and the artificial goal ``x_g``. Dynamics enter as
equality constraints linearized at each iterate; each QP subproblem is
condensed onto ``(du, dx_g)`` and solved with the interior-point QP,
screening the bound rows so that only potentially active ones are carried.
Globalization is a backtracking line search on an l1 merit function.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .costs import CostTerm
from .qp import solve_qp, solve_unconstrained

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max-iters"
INFEASIBLE = "infeasible"


@dataclass
class MpcWeights:
    """Cost weights; tilt weights default to zero (pure cooperation)."""

    Q: np.ndarray
    R: np.ndarray
    W: np.ndarray
    lambda_w: float = 0.0
    lambda_v: float = 0.0
    lambda_u: float = 0.0

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        for name in ("Q", "W"):
            M = getattr(self, name)
            if not np.allclose(M, M.T) or np.linalg.eigvalsh(M).min() < -1e-10:
                raise ValueError(f"{name} must be symmetric positive semidefinite")
        if not np.allclose(self.R, self.R.T):
            raise ValueError("R must be symmetric positive definite")
        np.linalg.cholesky(self.R)  # raises LinAlgError if not PD
        if min(self.lambda_w, self.lambda_v, self.lambda_u) < 0.0:
            raise ValueError("tilt weights must be >= 0")


@dataclass
class MpcProblem:
    """One receding-horizon problem instance.

    ``peer_goal`` is the received peer goal mapped into this vehicle's state
    space; ``W`` selects which components are coupled. ``tilt`` is an
    optional callable returning a :class:`CostTerm` for the goal;
    ``tilt_value`` optionally gives its value alone (used in line searches).
    """

    model: object
    horizon: int
    dt: float
    x_init: np.ndarray
    peer_goal: np.ndarray
    weights: MpcWeights
    x_bounds: tuple
    u_bounds: tuple
    goal_bounds: Optional[tuple] = None
    tilt: Optional[Callable[[np.ndarray], CostTerm]] = None
    max_iter: int = 50
    tol: float = 1e-6
    tilt_value: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        self.x_init = np.asarray(self.x_init, dtype=float)
        self.peer_goal = np.asarray(self.peer_goal, dtype=float)
        if not np.all(np.isfinite(self.x_init)):
            raise ValueError("x_init must be finite")
        self.x_bounds = tuple(np.asarray(b, dtype=float) for b in self.x_bounds)
        self.u_bounds = tuple(np.asarray(b, dtype=float) for b in self.u_bounds)
        if self.goal_bounds is None:
            self.goal_bounds = self.x_bounds
        self.goal_bounds = tuple(np.asarray(b, dtype=float) for b in self.goal_bounds)


@dataclass
class MpcSolution:
    states: np.ndarray
    inputs: np.ndarray
    goal: np.ndarray
    cost: float
    breakdown: dict
    status: str
    iterations: int
    kkt_residual: float
    dt: float = 0.0

    def shifted(self, elapsed: float) -> "MpcSolution":
        """Warm start advanced by ``elapsed`` seconds (linear interpolation)."""
        if elapsed <= 0.0 or self.dt <= 0.0:
            return self
        N = self.inputs.shape[0]
        tk = np.arange(N + 1) * self.dt
        tq = np.minimum(tk + elapsed, tk[-1])
        X = np.column_stack([np.interp(tq, tk, self.states[:, i]) for i in range(self.states.shape[1])])
        tu = np.arange(N) * self.dt
        U = np.column_stack([np.interp(np.minimum(tu + elapsed, tu[-1]), tu, self.inputs[:, i])
                             for i in range(self.inputs.shape[1])])
        return MpcSolution(X, U, self.goal.copy(), self.cost, dict(self.breakdown), self.status,
                           self.iterations, self.kkt_residual, self.dt)


def evaluate_cost(problem: MpcProblem, X, U, g, tilt_value=None):
    """Total cost and ``{track, coop, tilt}`` breakdown at a point."""
    w = problem.weights
    D = X[1:] - g
    track = float(np.einsum("ki,ij,kj->", D, w.Q, D) + np.einsum("ki,ij,kj->", U, w.R, U))
    e = g - problem.peer_goal
    coop = float(e @ w.W @ e)
    if tilt_value is not None:
        tilt = float(tilt_value)
    elif problem.tilt is None:
        tilt = 0.0
    elif problem.tilt_value is not None:
        tilt = float(problem.tilt_value(g))
    else:
        tilt = problem.tilt(g).value
    return track + coop + tilt, {"track": track, "coop": coop, "tilt": tilt}


def _psd(M):
    vals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    if vals.min() >= 0.0:
        return M
    return (vecs * np.maximum(vals, 0.0)) @ vecs.T


class MpcSolver:
    """Reusable SQP solver; caches condensing matrices for linear models.

    Not re-entrant: one instance per vehicle.
    """

    def __init__(self, screen_rounds: int = 6, regularization: float = 1e-9):
        self.screen_rounds = screen_rounds
        self.regularization = regularization
        self._cache = {}
        self._active_hint = None

    # -- condensing ---------------------------------------------------------

    def _linear_terms(self, problem):
        key = (id(problem.model), problem.dt, problem.horizon)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        A, B = problem.model.matrices(problem.dt)
        N = problem.horizon
        nx, nu = B.shape
        As = [A] * N
        Bs = [B] * N
        Gamma = self._gamma(As, Bs, nx, nu, N)
        self._cache[key] = (A, B, Gamma)
        return A, B, Gamma

    @staticmethod
    def _gamma(As, Bs, nx, nu, N):
        G = np.zeros((N * nx, N * nu))
        for k in range(N):
            r = slice(k * nx, (k + 1) * nx)
            if k > 0:
                G[r, : k * nu] = As[k] @ G[(k - 1) * nx: k * nx, : k * nu]
            G[r, k * nu: (k + 1) * nu] = Bs[k]
        return G

    def _linearize(self, problem, X, U):
        N = problem.horizon
        model = problem.model
        if getattr(model, "linear", False):
            A, B, Gamma = self._linear_terms(problem)
            F = X[:-1] @ A.T + U @ B.T
            As = None
        else:
            nx, nu = model.nx, model.nu
            if hasattr(model, "linearize_horizon"):
                F, As, Bs = model.linearize_horizon(X[:-1], U, problem.dt)
            else:
                F = np.empty((N, nx))
                As, Bs = [], []
                for k in range(N):
                    F[k], Ak, Bk = model.linearize(X[k], U[k], problem.dt)
                    As.append(Ak)
                    Bs.append(Bk)
            Gamma = self._gamma(As, Bs, nx, nu, N)
            A = None
        defects = F - X[1:]
        # propagate defects through the linearized dynamics
        nx = X.shape[1]
        e = np.empty((N, nx))
        prev = np.zeros(nx)
        for k in range(N):
            Ak = A if As is None else As[k]
            prev = (Ak @ prev if k > 0 else prev) + defects[k]
            e[k] = prev
        return Gamma, defects, e

    # -- main loop ----------------------------------------------------------

    def solve(self, problem: MpcProblem, warm_start: Optional[MpcSolution] = None) -> MpcSolution:
        N = problem.horizon
        nx = problem.x_init.size
        xl, xu = problem.x_bounds
        ul, uu = problem.u_bounds
        gl, gu = problem.goal_bounds
        nu = ul.size
        w = problem.weights

        if np.any(problem.x_init < xl - 1e-9) or np.any(problem.x_init > xu + 1e-9):
            X = np.tile(problem.x_init, (N + 1, 1))
            U = np.zeros((N, nu))
            g = np.clip(problem.x_init, gl, gu)
            cost, br = evaluate_cost(problem, X, U, g)
            return MpcSolution(X, U, g, cost, br, INFEASIBLE, 0, np.inf, problem.dt)

        if warm_start is not None and warm_start.states.shape == (N + 1, nx):
            X = warm_start.states.copy()
            U = np.clip(warm_start.inputs, ul, uu)
            g = np.clip(warm_start.goal, gl, gu)
        else:
            X = np.tile(problem.x_init, (N + 1, 1))
            U = np.clip(np.zeros((N, nu)), ul, uu)
            g = np.clip(problem.x_init, gl, gu)
        X[0] = problem.x_init

        free_g = gl < gu
        fixed = ~free_g
        g[fixed] = gl[fixed]
        ng = int(free_g.sum())
        nz = N * nu + ng

        Q2 = 2.0 * w.Q
        R2 = 2.0 * w.R
        W2 = 2.0 * w.W
        Hxx_blocks = np.kron(np.eye(N), Q2)
        Huu = np.kron(np.eye(N), R2)
        Hxg = np.tile(-Q2, (N, 1))  # (N*nx, nx)

        # bound rows expressed on absolute quantities; finite rows only
        sx_up = np.isfinite(np.tile(xu, N))
        sx_lo = np.isfinite(np.tile(xl, N))
        xu_t, xl_t = np.tile(xu, N), np.tile(xl, N)

        mult = None  # multipliers on the full row set of the previous QP
        # Levenberg-Marquardt style damping: grows while the line search has to
        # cut steps (linearization poor), decays after full steps
        damping = 0.0
        damp_base = max(float(np.abs(np.diag(w.R)).max()), 1e-12)
        nu_pen = 1.0
        best = None
        status = MAX_ITERS
        kkt = np.inf
        it = 0
        for it in range(problem.max_iter + 1):
            Gamma, defects, e = self._linearize(problem, X, U)
            Xf = X[1:].reshape(-1)
            ef = e.reshape(-1)

            D = X[1:] - g
            grad_X = (D @ Q2.T).reshape(-1)
            grad_U = (U @ R2.T).reshape(-1)
            tilt = problem.tilt(g) if problem.tilt is not None else None
            grad_g = -Q2 @ D.sum(0) + W2 @ (g - problem.peer_goal)
            Hgg = N * Q2 + W2
            if tilt is not None:
                grad_g = grad_g + tilt.gradient
                Hgg = Hgg + _psd(tilt.hessian)

            # condensed QP in z = (du, dg_free)
            HG = Hxx_blocks @ Gamma
            H = np.empty((nz, nz))
            H[: N * nu, : N * nu] = Gamma.T @ HG + Huu
            Hug = (Gamma.T @ Hxg)[:, free_g]
            H[: N * nu, N * nu:] = Hug
            H[N * nu:, : N * nu] = Hug.T
            H[N * nu:, N * nu:] = Hgg[np.ix_(free_g, free_g)]
            c = np.empty(nz)
            c[: N * nu] = Gamma.T @ (grad_X + Hxx_blocks @ ef) + grad_U
            c[N * nu:] = (grad_g + Hxg.T @ ef)[free_g]

            # rows: state upper, state lower, input upper, input lower, goal upper, goal lower
            Cx = np.hstack([Gamma, np.zeros((N * nx, ng))])
            Cu = np.hstack([np.eye(N * nu), np.zeros((N * nu, ng))])
            Cg = np.hstack([np.zeros((ng, N * nu)), np.eye(ng)])
            Uf = U.reshape(-1)
            C_all = np.vstack([Cx[sx_up], -Cx[sx_lo], Cu, -Cu, Cg, -Cg])
            d_all = np.concatenate([
                (xu_t - Xf - ef)[sx_up],
                -(xl_t - Xf - ef)[sx_lo],
                np.tile(uu, N) - Uf,
                -(np.tile(ul, N) - Uf),
                (gu - g)[free_g],
                -(gl - g)[free_g],
            ])
            # undo the defect shift to measure the current point
            slack_now = d_all.copy()
            nxu, nxl = int(sx_up.sum()), int(sx_lo.sum())
            slack_now[:nxu] += ef[sx_up]
            slack_now[nxu: nxu + nxl] -= ef[sx_lo]

            feas = max(np.abs(defects).max(initial=0.0), max(0.0, -slack_now.min(initial=0.0)))
            lam = mult if mult is not None and mult.size == d_all.size else np.zeros(d_all.size)
            # reduced gradient at the current point (zero-defect part)
            c0 = np.empty(nz)
            c0[: N * nu] = Gamma.T @ grad_X + grad_U
            c0[N * nu:] = grad_g[free_g]
            # dual residuals scaled by the multiplier size, so large tilt
            # weights pressing the goal onto a bound do not stall convergence
            s_d = max(1.0, np.abs(lam).max(initial=0.0))
            stat = np.abs(c0 + C_all.T @ lam).max(initial=0.0) / s_d
            comp = np.abs(lam * np.maximum(slack_now, 0.0)).max(initial=0.0) / s_d
            kkt = max(stat, feas, comp)

            cost, br = evaluate_cost(problem, X, U, g, None if tilt is None else tilt.value)
            log.debug("sqp it=%d cost=%.9g stat=%.2e feas=%.2e comp=%.2e", it, cost, stat, feas, comp)
            if feas <= 1e-6 and (best is None or cost < best[0]):
                best = (cost, X.copy(), U.copy(), g.copy(), br, kkt)
            if kkt < problem.tol:
                status = CONVERGED
                break
            if it == problem.max_iter:
                break

            H[np.diag_indices(nz)] += self.regularization * max(1.0, np.abs(np.diag(H)).max())
            if damping > 0.0:
                H[np.diag_indices(nz)] += damping
            dz, mult = self._solve_screened(H, c, C_all, d_all)

            du = dz[: N * nu]
            dX = (Gamma @ du + ef).reshape(N, nx)
            dU = du.reshape(N, nu)
            dg = np.zeros(nx)
            dg[free_g] = dz[N * nu:]

            # l1 merit line search
            # input and goal rows are linear and stay satisfied along the
            # step; only defects and state bounds need covering by the penalty
            costate = np.abs(grad_X).reshape(N, nx).sum(0).max(initial=0.0)
            nu_pen = max(nu_pen, 2.0 * (np.abs(mult[: nxu + nxl]).max(initial=0.0) + costate) + 1.0)
            viol0 = np.abs(defects).sum() + np.maximum(-slack_now, 0.0).sum()
            merit0 = cost + nu_pen * viol0
            slope = grad_X @ dX.reshape(-1) + grad_U @ du + grad_g @ dg - nu_pen * viol0
            alpha = 1.0
            accepted = False
            for _ in range(30):
                Xn = X.copy()
                Xn[1:] += alpha * dX
                Un = U + alpha * dU
                gn = g + alpha * dg
                cn, _ = evaluate_cost(problem, Xn, Un, gn)
                Fn = self._rollout_defects(problem, Xn, Un)
                vn = np.abs(Fn).sum() + self._bound_violation(Xn, Un, gn, problem)
                if cn + nu_pen * vn <= merit0 + 1e-4 * alpha * min(slope, 0.0) + 1e-12 * abs(merit0):
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                log.debug("line search failed at iteration %d (kkt %.3e)", it, kkt)
                break
            log.debug("sqp step alpha=%.3g |du|=%.2e |dg|=%.2e", alpha, np.abs(du).max(initial=0.0),
                      np.abs(dg).max(initial=0.0))
            X, U, g = Xn, Un, gn
            if alpha < 0.5:
                damping = min(max(4.0 * damping, damp_base), 1e8 * damp_base)
            elif alpha == 1.0:
                damping = 0.0 if damping <= 1e-4 * damp_base else 0.25 * damping

        if status != CONVERGED and best is not None:
            cost, X, U, g, br, kkt_b = best
            kkt = min(kkt, kkt_b) if np.isfinite(kkt) else kkt_b
        else:
            cost, br = evaluate_cost(problem, X, U, g)
        return MpcSolution(X, U, g, cost, br, status, it, float(kkt), problem.dt)

    def _rollout_defects(self, problem, X, U):
        model = problem.model
        if getattr(model, "linear", False):
            A, B, _ = self._linear_terms(problem)
            return X[:-1] @ A.T + U @ B.T - X[1:]
        if hasattr(model, "linearize_horizon"):
            return model.linearize_horizon(X[:-1], U, problem.dt)[0] - X[1:]
        return np.array([model.step(X[k], U[k], problem.dt) for k in range(problem.horizon)]) - X[1:]

    @staticmethod
    def _bound_violation(X, U, g, problem):
        xl, xu = problem.x_bounds
        ul, uu = problem.u_bounds
        gl, gu = problem.goal_bounds
        v = 0.0
        for val, lo, hi in ((X[1:], xl, xu), (U, ul, uu), (g, gl, gu)):
            v += np.maximum(val - hi, 0.0).sum() + np.maximum(lo - val, 0.0).sum()
        return v

    def _solve_screened(self, H, c, C, d):
        """Solve the QP carrying only rows that can be active."""
        m = d.size
        z = solve_unconstrained(H, c)
        viol = C @ z - d
        tol = 1e-9 * max(1.0, np.abs(d).max(initial=0.0))
        if m == 0 or viol.max() <= tol:
            return z, np.zeros(m)
        active = viol > tol
        if self._active_hint is not None and self._active_hint.size == m:
            active |= self._active_hint
        mult = np.zeros(m)
        for _ in range(self.screen_rounds):
            idx = np.flatnonzero(active)
            res = solve_qp(H, c, C[idx], d[idx])
            z = res.z
            viol = C @ z - d
            new = (viol > tol) & ~active
            if not new.any():
                mult[:] = 0.0
                mult[idx] = res.multipliers
                mult[mult < 1e-12 * max(1.0, np.abs(mult).max())] = 0.0
                self._active_hint = mult > 0.0
                return z, mult
            active |= new
        res = solve_qp(H, c, C, d)
        self._active_hint = res.multipliers > 1e-9
        return res.z, res.multipliers


def solve(problem: MpcProblem, warm_start: Optional[MpcSolution] = None) -> MpcSolution:
    """Solve one MPC problem with a fresh solver instance."""
    return MpcSolver().solve(problem, warm_start)

"""Gaussian-process regression of the squared-tilt field.

Inputs are rows ``a = (q_x, q_y, t)``. The kernel is squared exponential
with per-dimension length scales; the observation-noise term enters on
the diagonal of the training covariance and also in the prior variance
at a query point, so predictive variance is that of a noisy observation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize
from scipy.stats import qmc

log = logging.getLogger(__name__)

JITTER = 1e-8
JITTER_RETRIES = 3


class GpFitError(RuntimeError):
    """Raised when the covariance matrix cannot be factorized."""


@dataclass(frozen=True)
class GpHyperparams:
    signal_variance: float
    noise_variance: float
    length_scales: tuple

    def __post_init__(self):
        object.__setattr__(self, "length_scales", tuple(float(v) for v in self.length_scales))
        if not self.signal_variance > 0.0:
            raise ValueError("signal_variance must be > 0")
        if not self.noise_variance >= 0.0:
            raise ValueError("noise_variance must be >= 0")
        if not all(v > 0.0 for v in self.length_scales):
            raise ValueError("length_scales must be > 0")

    @property
    def inv_sq_lengths(self) -> np.ndarray:
        return 1.0 / np.asarray(self.length_scales) ** 2

    def to_log(self) -> np.ndarray:
        return np.log([self.signal_variance, self.noise_variance, *self.length_scales])

    @classmethod
    def from_log(cls, theta) -> "GpHyperparams":
        v = np.exp(np.asarray(theta, dtype=float))
        return cls(float(v[0]), float(v[1]), tuple(v[2:]))

    def to_dict(self) -> dict:
        return {
            "signal_variance": self.signal_variance,
            "noise_variance": self.noise_variance,
            "length_scales": list(self.length_scales),
        }


@dataclass
class GpDataset:
    inputs: np.ndarray
    observations: np.ndarray

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.observations = np.asarray(self.observations, dtype=float).reshape(-1)
        if self.inputs.shape[0] != self.observations.shape[0] or self.inputs.shape[0] < 1:
            raise ValueError("inputs and observations must have equal, nonzero length")
        if np.any(self.observations < 0.0):
            raise ValueError("squared-tilt observations must be >= 0")

    def __len__(self):
        return self.observations.shape[0]


def se_kernel(a, a_prime, hp: GpHyperparams, same_index: bool = False) -> float:
    """Squared-exponential covariance between two input records."""
    d = np.asarray(a, dtype=float) - np.asarray(a_prime, dtype=float)
    k = hp.signal_variance * np.exp(-0.5 * np.sum(d * d * hp.inv_sq_lengths))
    if same_index:
        k += hp.noise_variance
    return float(k)


def cross_covariance(A, B, hp: GpHyperparams) -> np.ndarray:
    """Noise-free kernel matrix between row sets ``A`` and ``B``."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    w = np.sqrt(hp.inv_sq_lengths)
    As, Bs = A * w, B * w
    sq = (As * As).sum(1)[:, None] + (Bs * Bs).sum(1)[None, :] - 2.0 * As @ Bs.T
    np.maximum(sq, 0.0, out=sq)
    return hp.signal_variance * np.exp(-0.5 * sq)


def _factorize(K: np.ndarray, signal_variance: float):
    jitter = JITTER * signal_variance
    n = K.shape[0]
    for _ in range(JITTER_RETRIES + 1):
        try:
            L = cholesky(K + jitter * np.eye(n), lower=True)
            return L, jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise GpFitError("covariance matrix is not positive definite even with jitter")


class GpModel:
    """Fitted GP posterior; immutable after construction.

    ``L`` is the lower Cholesky factor of ``K + jitter * I`` and
    ``weights`` is ``K^-1 Phi``.
    """

    def __init__(self, dataset: GpDataset, hyperparams: GpHyperparams, seed=None):
        self.dataset = dataset
        self.hyperparams = hyperparams
        self.seed = seed
        X = dataset.inputs
        K = cross_covariance(X, X, hyperparams) + hyperparams.noise_variance * np.eye(len(dataset))
        self.L, self.jitter = _factorize(K, hyperparams.signal_variance)
        self.weights = cho_solve((self.L, True), dataset.observations)

    @property
    def prior_variance(self) -> float:
        return self.hyperparams.signal_variance + self.hyperparams.noise_variance

    def _k(self, a):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return a, cross_covariance(a, self.dataset.inputs, self.hyperparams)

    def mean(self, a):
        """Posterior mean at query rows ``a``."""
        _, k = self._k(a)
        return k @ self.weights

    def variance(self, a):
        """Posterior variance at query rows ``a``, floored at zero."""
        _, k = self._k(a)
        v = solve_triangular(self.L, k.T, lower=True)
        var = self.prior_variance - np.sum(v * v, axis=0)
        return np.maximum(var, 0.0)

    def mean_gradient(self, a):
        """Gradient of the posterior mean w.r.t. the query input."""
        a, k = self._k(a)
        diff = a[:, None, :] - self.dataset.inputs[None, :, :]
        kw = k * self.weights[None, :]
        return -np.einsum("nj,njd->nd", kw, diff) * self.hyperparams.inv_sq_lengths

    def mean_hessian(self, a):
        a, k = self._k(a)
        lam = self.hyperparams.inv_sq_lengths
        diff = (a[:, None, :] - self.dataset.inputs[None, :, :]) * lam
        kw = k * self.weights[None, :]
        h = np.einsum("nj,njd,nje->nde", kw, diff, diff)
        h -= kw.sum(1)[:, None, None] * np.diag(lam)[None]
        return h

    def _dk(self, a):
        # k: (n, N); dk: (n, N, d)
        a, k = self._k(a)
        diff = a[:, None, :] - self.dataset.inputs[None, :, :]
        dk = -k[:, :, None] * diff * self.hyperparams.inv_sq_lengths
        return a, k, diff, dk

    def variance_gradient(self, a):
        _, k, _, dk = self._dk(a)
        kinv_k = cho_solve((self.L, True), k.T).T
        return -2.0 * np.einsum("nj,njd->nd", kinv_k, dk)

    def variance_hessian(self, a):
        _, k, diff, dk = self._dk(a)
        lam = self.hyperparams.inv_sq_lengths
        kinv_k = cho_solve((self.L, True), k.T).T
        n, N, d = dk.shape
        # second derivative of each k_j w.r.t. the query
        sd = diff * lam
        d2k = k[:, :, None, None] * (sd[:, :, :, None] * sd[:, :, None, :] - np.diag(lam)[None, None])
        term1 = np.einsum("nj,njde->nde", kinv_k, d2k)
        out = np.empty((n, d, d))
        for i in range(n):
            Vi = solve_triangular(self.L, dk[i], lower=True)
            out[i] = Vi.T @ Vi
        return -2.0 * (term1 + out)

    def to_dict(self) -> dict:
        return {
            "format": "tiltland.gp",
            "version": 1,
            "kernel": "squared_exponential",
            "seed": self.seed,
            "hyperparams": self.hyperparams.to_dict(),
            "inputs": self.dataset.inputs.tolist(),
            "observations": self.dataset.observations.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GpModel":
        if d.get("format") != "tiltland.gp":
            raise ValueError("not a serialized GP model")
        hp = d["hyperparams"]
        return cls(
            GpDataset(np.array(d["inputs"]), np.array(d["observations"])),
            GpHyperparams(hp["signal_variance"], hp["noise_variance"], tuple(hp["length_scales"])),
            seed=d.get("seed"),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "GpModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def log_marginal_likelihood(data: GpDataset, theta, eval_gradient=False):
    """Log evidence for log-hyperparameters ``theta = log(s2, n2, l_1..l_d)``.

    Returns ``(lml, grad)`` when ``eval_gradient`` is set; the gradient is
    w.r.t. ``theta``.
    """
    hp = GpHyperparams.from_log(theta)
    X, y = data.inputs, data.observations
    n = len(data)
    Kf = cross_covariance(X, X, hp)
    K = Kf + hp.noise_variance * np.eye(n)
    L, _ = _factorize(K, hp.signal_variance)
    alpha = cho_solve((L, True), y)
    lml = -0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2.0 * np.pi)
    if not eval_gradient:
        return lml
    inner = np.outer(alpha, alpha) - cho_solve((L, True), np.eye(n))
    grads = [Kf, hp.noise_variance * np.eye(n)]
    for dim, lam in enumerate(hp.inv_sq_lengths):
        d = X[:, dim][:, None] - X[:, dim][None, :]
        grads.append(Kf * d * d * lam)
    g = np.array([0.5 * np.sum(inner * dK) for dK in grads])
    return lml, g


def fit_hyperparams(data: GpDataset, init: GpHyperparams, restarts: int = 5,
                    seed=0, log_bounds=(-12.0, 6.0)) -> GpHyperparams:
    """Maximize the log marginal likelihood over log-hyperparameters.

    The first run starts at ``init``; further restarts are drawn uniformly in
    log space around it. The result never has lower evidence than ``init``.
    """
    if len(data) < 2:
        raise ValueError("need at least two observations to fit hyperparameters")
    rng = np.random.default_rng(seed)
    theta0 = init.to_log()
    # noise variance of zero has no log; start it small
    theta0 = np.where(np.isfinite(theta0), theta0, log_bounds[0])
    bounds = [log_bounds] * theta0.size

    def objective(theta):
        try:
            lml, g = log_marginal_likelihood(data, theta, eval_gradient=True)
        except GpFitError:
            return 1e25, np.zeros_like(theta)
        return -lml, -g

    best_theta = theta0
    try:
        best_lml = log_marginal_likelihood(data, theta0)
    except GpFitError:
        best_lml = -np.inf
    failures = 0
    for r in range(max(restarts, 1)):
        start = theta0 if r == 0 else np.clip(theta0 + rng.uniform(-2.0, 2.0, theta0.size), *log_bounds)
        res = minimize(objective, start, jac=True, method="L-BFGS-B", bounds=bounds)
        if res.fun >= 1e25:
            failures += 1
            continue
        if -res.fun > best_lml:
            best_lml, best_theta = -res.fun, res.x
    if failures == max(restarts, 1) and not np.isfinite(best_lml):
        raise GpFitError("every restart failed to factorize the covariance")
    log.debug("fitted GP hyperparameters, lml=%.4f", best_lml)
    return GpHyperparams.from_log(best_theta)


def latin_hypercube(n: int, bounds, seed=None) -> np.ndarray:
    """Latin-hypercube design of ``n`` points inside per-dimension ``bounds``."""
    bounds = np.asarray(bounds, dtype=float)
    if n < 1 or bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] < 1:
        raise ValueError("need n >= 1 and bounds of shape (d, 2)")
    lo, hi = bounds.min(axis=1), bounds.max(axis=1)
    sampler = qmc.LatinHypercube(d=bounds.shape[0], seed=np.random.default_rng(seed))
    return lo + sampler.random(n) * (hi - lo)

"""Gaussian-process regression with an ARD Matern-5/2 kernel.

Targets are standardized to zero mean and unit variance before fitting and
the prior mean is zero in standardized space.  Hyperparameters (one
lengthscale per dimension, signal variance, noise variance) are chosen by
maximizing the log marginal likelihood from a fixed set of quasi-random
starts with a deterministic pattern search in log10 space, so fitting the
same data always yields the same model.  The noise variance is floored:
the objectives this model sees are genuinely noisy, and zero-noise fits
would be singular as well as wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import ndtr
from scipy.stats import qmc

from .errors import IllConditionedError
from .search import pattern_search

NOISE_FLOOR = 1e-8
_MAX_JITTER = 1e-6
_SQRT5 = math.sqrt(5.0)
_HYPER_START_SEED = 20230615  # fixed: hyperparameter starts never vary
_N_STARTS = 8
_N_POLISHED = 2
_MAX_EVALS_PER_START = 120

DEFAULT_LS_BOUNDS = (1e-2, 10.0)
DEFAULT_SIGNAL_BOUNDS = (1e-4, 100.0)
DEFAULT_NOISE_UPPER = 1.0


def _sq_dists(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Per-dimension squared distances, shape (d, n, m)."""
    return (X.T[:, :, None] - Z.T[:, None, :]) ** 2


def _matern52(r2: np.ndarray) -> np.ndarray:
    r = np.sqrt(np.maximum(r2, 0.0))
    return (1.0 + _SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-_SQRT5 * r)


def _kernel_from_dists(D: np.ndarray, lengthscales: np.ndarray,
                       signal_var: float) -> np.ndarray:
    r2 = np.tensordot(1.0 / lengthscales**2, D, axes=1)
    return signal_var * _matern52(r2)


def _chol_with_jitter(K: np.ndarray):
    """Lower Cholesky factor with adaptive jitter; raises when 1e-6 fails."""
    jitter = 0.0
    while True:
        try:
            L = scipy.linalg.cholesky(K + jitter * np.eye(K.shape[0]),
                                      lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            if jitter >= _MAX_JITTER:
                raise IllConditionedError(
                    f"kernel not positive definite at maximum jitter {_MAX_JITTER}"
                ) from None
            jitter = 1e-10 if jitter == 0.0 else jitter * 10.0


@dataclass
class GpModel:
    """Fitted GP: training data, hyperparameters, cached factorization."""

    x_train: np.ndarray
    y_train: np.ndarray
    y_mean: float
    y_scale: float
    lengthscales: np.ndarray
    signal_var: float
    noise_var: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray           # (K + noise I)^-1 y_standardized
    log_marginal: float
    fit_info: dict = field(default_factory=dict)

    @property
    def n_train(self) -> int:
        return self.x_train.shape[0]


def _log_marginal(D, y_std, lengthscales, signal_var, noise_var):
    n = y_std.shape[0]
    K = _kernel_from_dists(D, lengthscales, signal_var)
    K[np.diag_indices(n)] += noise_var
    try:
        L = scipy.linalg.cholesky(K, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return -np.inf
    alpha = scipy.linalg.cho_solve((L, True), y_std, check_finite=False)
    return float(-0.5 * (y_std @ alpha) - np.sum(np.log(np.diag(L)))
                 - 0.5 * n * math.log(2.0 * math.pi))


def make_gp(X, y, lengthscales, signal_var: float, noise_var: float,
            fit_info: dict | None = None) -> GpModel:
    """Assemble a model with fixed hyperparameters (no likelihood search)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    lengthscales = np.broadcast_to(np.asarray(lengthscales, dtype=float),
                                   (X.shape[1],)).copy()
    if np.any(lengthscales <= 0) or signal_var <= 0 or noise_var < 0:
        raise ValueError("lengthscales and signal variance must be positive")
    y_mean = float(np.mean(y))
    y_scale = float(np.std(y))
    if y_scale < 1e-12:
        y_scale = 1.0
    y_std = (y - y_mean) / y_scale
    D = _sq_dists(X, X)
    K = _kernel_from_dists(D, lengthscales, signal_var)
    K[np.diag_indices(X.shape[0])] += noise_var
    L, jitter = _chol_with_jitter(K)
    alpha = scipy.linalg.cho_solve((L, True), y_std, check_finite=False)
    lml = float(-0.5 * (y_std @ alpha) - np.sum(np.log(np.diag(L)))
                - 0.5 * X.shape[0] * math.log(2.0 * math.pi))
    return GpModel(X, y, y_mean, y_scale, lengthscales, float(signal_var),
                   float(noise_var), jitter, L, alpha, lml, fit_info or {})


def fit_gp(X, y, noise_floor: float = NOISE_FLOOR,
           ls_bounds=DEFAULT_LS_BOUNDS, signal_bounds=DEFAULT_SIGNAL_BOUNDS,
           noise_upper: float = DEFAULT_NOISE_UPPER) -> GpModel:
    """Fit hyperparameters by multi-start log-marginal-likelihood ascent.

    The resulting likelihood is at least that of every start's initial
    point: starts are screened, the most promising are polished by pattern
    search, and the overall best wins.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 observations to fit")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite training data")

    y_mean = float(np.mean(y))
    y_scale = float(np.std(y))
    if y_scale < 1e-12:
        y_scale = 1.0
    y_std = (y - y_mean) / y_scale
    D = _sq_dists(X, X)

    lo = np.array([math.log10(ls_bounds[0])] * d
                  + [math.log10(signal_bounds[0]), math.log10(noise_floor)])
    hi = np.array([math.log10(ls_bounds[1])] * d
                  + [math.log10(signal_bounds[1]), math.log10(noise_upper)])

    def neg_lml(theta):
        ls = 10.0 ** theta[:d]
        return -_log_marginal(D, y_std, ls, 10.0 ** theta[d], 10.0 ** theta[d + 1])

    sampler = qmc.Sobol(d + 2, scramble=True,
                        seed=np.random.default_rng(_HYPER_START_SEED))
    starts = lo + sampler.random(_N_STARTS) * (hi - lo)
    start_vals = np.array([neg_lml(t) for t in starts])
    order = np.argsort(start_vals, kind="stable")

    best_theta, best_val = starts[order[0]], start_vals[order[0]]
    for k in order[:_N_POLISHED]:
        theta, val = pattern_search(neg_lml, starts[k], lo, hi, step=0.4,
                                    step_min=0.05,
                                    max_evals=_MAX_EVALS_PER_START)
        if val < best_val:
            best_theta, best_val = theta, val

    info = {"start_lml": (-start_vals).tolist(), "final_lml": -float(best_val)}
    return make_gp(X, y, 10.0 ** best_theta[:d], 10.0 ** best_theta[d],
                   10.0 ** best_theta[d + 1], fit_info=info)


def posterior(gp: GpModel, x):
    """Posterior mean and (latent, noise-free) variance at query points.

    Accepts a single point (d,) or a batch (m, d); returns floats or
    (m,) arrays accordingly.  Variance is clipped at zero.
    """
    xq = np.asarray(x, dtype=float)
    single = xq.ndim == 1
    Xq = np.atleast_2d(xq)
    Ks = _kernel_from_dists(_sq_dists(Xq, gp.x_train), gp.lengthscales,
                            gp.signal_var)
    mean = gp.y_mean + gp.y_scale * (Ks @ gp.alpha)
    v = scipy.linalg.solve_triangular(gp.chol, Ks.T, lower=True,
                                      check_finite=False)
    var = gp.y_scale**2 * np.maximum(gp.signal_var - np.sum(v**2, axis=0), 0.0)
    if single:
        return float(mean[0]), float(var[0])
    return mean, var


def expected_improvement_values(mu, sigma, f_best):
    """Closed-form EI for minimization given posterior moments."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    improve = f_best - mu
    out = np.maximum(improve, 0.0)
    pos = sigma > 0
    if np.any(pos):
        z = np.where(pos, improve / np.where(pos, sigma, 1.0), 0.0)
        phi = np.exp(-0.5 * z**2) / math.sqrt(2.0 * math.pi)
        out = np.where(pos, improve * ndtr(z) + sigma * phi, out)
    return np.maximum(out, 0.0)


def expected_improvement(gp: GpModel, x, f_best: float):
    """EI at query points under the fitted posterior."""
    mean, var = posterior(gp, x)
    out = expected_improvement_values(mean, np.sqrt(var), f_best)
    return float(out) if np.ndim(out) == 0 else out

"""Derivative-free optimizers over a box domain.

Two strategies share one objective contract (a callable of a point that may
be stochastic, drawing from its own stream on every call):

* ``bayes_optimize``: GP-surrogate loop with Expected-Improvement proposals
  on the unit cube.  The recommendation is the minimizer of the final
  posterior mean, which need not be a visited point.
* ``nelder_mead``: the classic simplex method, run on the noisy objective
  exactly as on a deterministic one (no averaging), with a quadratic
  penalty steering trial points back into the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from .errors import IllConditionedError
from .gp import (GpModel, expected_improvement_values, fit_gp, posterior)
from .search import pattern_search
from .streams import RandomStream


@dataclass(frozen=True)
class BoOptions:
    budget: int = 100
    n_init: int = 8
    n_candidates: int = 4096
    noise_floor: float = 1e-8
    log_transform: bool = False
    ls_bounds: tuple = (1e-2, 10.0)
    signal_bounds: tuple = (1e-4, 100.0)
    noise_upper: float = 1.0


@dataclass
class BoResult:
    x_history: np.ndarray       # (budget, d), unit cube
    y_history: np.ndarray       # (budget,) raw observed values
    recommended: np.ndarray     # (d,), unit cube
    gp: GpModel
    n_evaluations: int


def _sobol_points(dim: int, n: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng(seed))
    return sampler.random(n)


def _fit_with_retry(X, y, options: BoOptions) -> GpModel:
    # an ill-conditioned fit is retried once with a doubled noise floor
    try:
        return fit_gp(X, y, noise_floor=options.noise_floor,
                      ls_bounds=options.ls_bounds,
                      signal_bounds=options.signal_bounds,
                      noise_upper=options.noise_upper)
    except IllConditionedError:
        return fit_gp(X, y, noise_floor=2.0 * options.noise_floor,
                      ls_bounds=options.ls_bounds,
                      signal_bounds=options.signal_bounds,
                      noise_upper=options.noise_upper)


def _argbest_then_polish(score, x0, max_evals: int = 100) -> np.ndarray:
    d = x0.shape[0]
    x, _ = pattern_search(score, x0, np.zeros(d), np.ones(d),
                          step=0.1, step_min=1e-3, max_evals=max_evals)
    return x


def propose_next(gp: GpModel, dim: int, f_best: float, stream: RandomStream,
                 n_candidates: int = 4096, extra_points=None) -> np.ndarray:
    """Approximate EI argmax: quasi-random screening plus local polish.

    The returned point's EI is at least the EI of every screened candidate.
    """
    cand = _sobol_points(dim, n_candidates, stream.integer_seed())
    if extra_points is not None and len(extra_points):
        cand = np.vstack([cand, np.atleast_2d(extra_points)])
    mean, var = posterior(gp, cand)
    ei = expected_improvement_values(mean, np.sqrt(var), f_best)
    x0 = cand[int(np.argmax(ei))]

    def neg_ei(x):
        m, v = posterior(gp, x)
        return -float(expected_improvement_values(m, np.sqrt(v), f_best))

    return _argbest_then_polish(neg_ei, x0)


def _recommend(gp: GpModel, dim: int, stream: RandomStream,
               n_candidates: int, extra_points) -> np.ndarray:
    cand = _sobol_points(dim, n_candidates, stream.integer_seed())
    cand = np.vstack([cand, np.atleast_2d(extra_points)])
    mean, _ = posterior(gp, cand)
    x0 = cand[int(np.argmin(mean))]

    def mean_at(x):
        return posterior(gp, x)[0]

    return _argbest_then_polish(mean_at, x0)


def bayes_optimize(objective, dim: int, stream: RandomStream,
                   options: BoOptions = BoOptions()) -> BoResult:
    """Run the GP/EI loop for exactly `options.budget` evaluations.

    `objective` maps a unit-cube point to a float and may be stochastic;
    all of this routine's own randomness comes from `stream`, so a fixed
    (objective stream, `stream`, options) replays bit for bit.
    """
    if options.budget < options.n_init:
        raise ValueError("budget must cover the initial design")
    if options.n_init < 2:
        raise ValueError("initial design needs at least 2 points")

    X = list(_sobol_points(dim, options.n_init,
                           stream.derive("design").integer_seed()))
    y = [float(objective(x)) for x in X]

    def fit_targets():
        arr = np.array(y)
        return np.log1p(arr) if options.log_transform else arr

    gp = _fit_with_retry(np.array(X), fit_targets(), options)
    for i in range(options.n_init, options.budget):
        f_best = float(np.min(fit_targets()))
        x = propose_next(gp, dim, f_best, stream.derive("cand", i),
                         options.n_candidates, extra_points=np.array(X))
        X.append(x)
        y.append(float(objective(x)))
        gp = _fit_with_retry(np.array(X), fit_targets(), options)

    rec = _recommend(gp, dim, stream.derive("recommend"),
                     options.n_candidates, np.array(X))
    return BoResult(np.array(X), np.array(y), rec, gp, len(y))


@dataclass(frozen=True)
class NmOptions:
    """Simplex coefficients plus termination and box-penalty settings."""

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_iter: int = 500
    tol: float = 1e-8           # simplex diameter (max-abs coordinate spread)
    penalty: float = 1e3
    init_edge: float = 0.1      # fraction of each dimension's span

    def __post_init__(self):
        if not (self.expansion > self.reflection > 0):
            raise ValueError("need expansion > reflection > 0")
        if not (0 < self.contraction < 1) or not (0 < self.shrink < 1):
            raise ValueError("contraction and shrink must lie in (0, 1)")


@dataclass
class NmResult:
    x: np.ndarray
    fun: float
    iterations: int
    reason: str                 # "tolerance" | "max_iterations"
    best_history: list = field(default_factory=list)


def nelder_mead(objective, lower, upper, x0,
                options: NmOptions = NmOptions()) -> NmResult:
    """Nelder-Mead on a box: trial points outside it are evaluated at their
    projection plus a quadratic distance penalty, and the final point is
    projected onto the box."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < lower) or np.any(x0 > upper):
        raise ValueError("starting point must lie inside the box")
    d = x0.size

    def f_eff(x):
        xc = np.clip(x, lower, upper)
        excess = float(np.sum((x - xc) ** 2))
        return float(objective(xc)) + options.penalty * excess

    verts = [x0.copy()]
    for j in range(d):
        step = options.init_edge * (upper[j] - lower[j])
        v = x0.copy()
        v[j] = v[j] + step if v[j] + step <= upper[j] else v[j] - step
        verts.append(v)
    verts = np.array(verts)
    fvals = np.array([f_eff(v) for v in verts])

    best_history = []
    reason = "max_iterations"
    iterations = 0
    for iterations in range(1, options.max_iter + 1):
        order = np.argsort(fvals, kind="stable")
        verts, fvals = verts[order], fvals[order]
        best_history.append(float(fvals[0]))
        if np.max(np.abs(verts[1:] - verts[0])) < options.tol:
            reason = "tolerance"
            break

        centroid = verts[:-1].mean(axis=0)
        xr = centroid + options.reflection * (centroid - verts[-1])
        fr = f_eff(xr)
        if fvals[0] <= fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[0]:
            xe = centroid + options.expansion * (xr - centroid)
            fe = f_eff(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + options.contraction * (xr - centroid)
            else:
                xc = centroid - options.contraction * (centroid - verts[-1])
            fc = f_eff(xc)
            if fc < min(fr, fvals[-1]):
                verts[-1], fvals[-1] = xc, fc
            else:
                for k in range(1, d + 1):
                    verts[k] = verts[0] + options.shrink * (verts[k] - verts[0])
                    fvals[k] = f_eff(verts[k])

    order = np.argsort(fvals, kind="stable")
    verts, fvals = verts[order], fvals[order]
    x_final = np.clip(verts[0], lower, upper)
    return NmResult(x_final, float(fvals[0]), iterations, reason, best_history)

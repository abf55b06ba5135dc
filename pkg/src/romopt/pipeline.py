"""Restart orchestration, Monte-Carlo evaluation and robust selection.

The pipeline runs the chosen optimizer from many independent restarts,
summarizes each returned candidate by a Monte-Carlo cost distribution, and
selects the candidate with the smallest high-quantile cost.  Every unit of
work (restart, candidate evaluation, sample) owns a pre-derived random
stream, so results are identical for any worker count and aggregation is
done in deterministic index order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, RomoptError
from .objective import (CostSpec, GaugedGeometry, auto_setpoint, cost_batch,
                        gauged_distance_batch, gauged_distance_grid,
                        stochastic_cost)
from .optimizers import BoOptions, NmOptions, bayes_optimize, nelder_mead
from .rom import RomModel
from .streams import RandomStream
from .uncertainty import (DistributionSpec, default_distributions,
                          sample_uncertain_for_seeds)

QUANTILE_LEVELS = (("p1", 0.01), ("p25", 0.25), ("p50", 0.50),
                   ("p75", 0.75), ("p99", 0.99))
BAND_KEYS = ("min", "p1", "p25", "p50", "p75", "p99", "max")

METHOD_BAYES = "bayes"
METHOD_SIMPLEX = "simplex"


def percentile(values, q: float) -> float:
    """Nearest-rank percentile: the ceil(q*n)-th smallest value, q in (0, 1]."""
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyInputError("percentile of empty values")
    if not 0.0 < q <= 1.0:
        raise ValueError("q must lie in (0, 1]")
    k = min(max(math.ceil(q * arr.size), 1), arr.size)
    return float(np.partition(arr, k - 1)[k - 1])


def quantile_summary(values) -> dict:
    """min/p1/p25/p50/p75/p99/max of a sample, keys in band order."""
    arr = np.sort(np.asarray(values, dtype=float).ravel())
    if arr.size == 0:
        raise EmptyInputError("summary of empty values")
    out = {"min": float(arr[0])}
    for key, q in QUANTILE_LEVELS:
        k = min(max(math.ceil(q * arr.size), 1), arr.size)
        out[key] = float(arr[k - 1])
    out["max"] = float(arr[-1])
    return out


@dataclass(frozen=True)
class Problem:
    """Everything needed to score a control vector."""

    model: RomModel
    geometry: GaugedGeometry
    cost_spec: CostSpec
    dists: tuple

    # optional search box narrowing, physical units over the controllables
    search_lower: np.ndarray | None = None
    search_upper: np.ndarray | None = None

    def control_box(self):
        space = self.model.space
        idx = space.controllable_idx
        lo = self.search_lower if self.search_lower is not None else space.lower[idx]
        hi = self.search_upper if self.search_upper is not None else space.upper[idx]
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)

    def control_from_unit(self, x) -> np.ndarray:
        lo, hi = self.control_box()
        return lo + np.asarray(x, dtype=float) * (hi - lo)


def make_problem(model: RomModel, setpoint="auto", stations=None,
                 alpha: float | None = None, dists=None,
                 search_lower=None, search_upper=None) -> Problem:
    """Assemble a Problem with defaults pulled from the model."""
    geometry = model.geometry
    dists = tuple(dists) if dists is not None else default_distributions(model.space)
    kwargs = {}
    if stations is not None:
        kwargs["stations"] = tuple((float(p), float(w)) for p, w in stations)
    if alpha is not None:
        kwargs["alpha"] = float(alpha)
    if setpoint == "auto":
        setpoint = auto_setpoint(model, geometry, dists)
    spec = CostSpec(setpoint=float(setpoint), **kwargs)
    return Problem(model, geometry, spec, dists,
                   None if search_lower is None else np.asarray(search_lower, dtype=float),
                   None if search_upper is None else np.asarray(search_upper, dtype=float))


@dataclass
class CandidateEvaluation:
    """Monte-Carlo summary of one candidate control vector."""

    run_id: int
    control: np.ndarray
    n_samples: int
    cost_quantiles: dict
    mean_cost: float
    distance_quantiles: dict
    selection_cost: float       # percentile of cost at the configured level


@dataclass
class PercentileBands:
    positions: np.ndarray
    bands: dict                 # BAND_KEYS -> per-position arrays


@dataclass
class RestartOutcome:
    run_id: int
    control: np.ndarray | None
    observed_cost: float | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def mc_evaluate(problem: Problem, control, n: int, stream: RandomStream,
                run_id: int = 0, q_select: float = 0.99) -> CandidateEvaluation:
    """Cost and end-of-line-distance distributions over n uncertain draws.

    Sample i uses the derived stream ("mc", i), so the result depends only
    on (stream, control, n), never on batching or thread count.
    """
    if n < 1:
        raise ValueError("need at least one Monte-Carlo sample")
    control = np.asarray(control, dtype=float)
    seeds = stream.child_seeds("mc", np.arange(n))
    U = sample_uncertain_for_seeds(problem.dists, seeds)
    costs = cost_batch(problem.model, problem.geometry, problem.cost_spec,
                       control, U)
    P = problem.model.space.assemble_batch(control, U)
    end_d = gauged_distance_batch(problem.model, problem.geometry, P,
                                  problem.model.line_length)
    return CandidateEvaluation(
        run_id=run_id,
        control=control,
        n_samples=n,
        cost_quantiles=quantile_summary(costs),
        mean_cost=float(np.mean(costs)),
        distance_quantiles=quantile_summary(end_d),
        selection_cost=percentile(costs, q_select),
    )


def _restart_worker(args) -> RestartOutcome:
    problem, method, run_id, master_seed, bo_options, nm_options = args
    restart = RandomStream(master_seed).derive("restart", run_id)
    obj_stream = restart.derive("objective")

    def objective(x_unit):
        c = problem.control_from_unit(x_unit)
        return stochastic_cost(problem.model, problem.geometry,
                               problem.cost_spec, c, problem.dists, obj_stream)

    dim = len(problem.model.space.controllable_idx)
    try:
        if method == METHOD_BAYES:
            result = bayes_optimize(objective, dim, restart.derive("bo"), bo_options)
            control = problem.control_from_unit(result.recommended)
            observed = float(np.min(result.y_history))
        elif method == METHOD_SIMPLEX:
            x0 = restart.derive("start").uniforms(dim)
            result = nelder_mead(objective, np.zeros(dim), np.ones(dim), x0,
                                 nm_options)
            control = problem.control_from_unit(result.x)
            observed = result.fun
        else:
            raise ValueError(f"unknown method {method!r}")
        return RestartOutcome(run_id, control, observed)
    except RomoptError as exc:
        return RestartOutcome(run_id, None, None, error=f"{type(exc).__name__}: {exc}")


def run_restarts(problem: Problem, method: str, n_restarts: int,
                 master_seed: int, bo_options: BoOptions = BoOptions(),
                 nm_options: NmOptions = NmOptions(),
                 n_workers: int = 1) -> list[RestartOutcome]:
    """Independent optimizer runs with per-restart derived streams.

    Individual failures are recorded in the outcome list; only a fully
    failed batch raises.
    """
    if n_restarts < 1:
        raise ValueError("need at least one restart")
    if method not in (METHOD_BAYES, METHOD_SIMPLEX):
        raise ValueError(f"unknown method {method!r}")
    tasks = [(problem, method, k, master_seed, bo_options, nm_options)
             for k in range(n_restarts)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_restart_worker, tasks))
    else:
        outcomes = [_restart_worker(t) for t in tasks]
    if not any(o.ok for o in outcomes):
        raise RomoptError(f"all {n_restarts} restarts failed; "
                          f"first error: {outcomes[0].error}")
    return outcomes


def select_best(outcomes, problem: Problem, n_mc: int, stream: RandomStream,
                q_select: float = 0.99):
    """Monte-Carlo-evaluate every successful candidate, pick the smallest
    selection percentile; ties break toward the lowest run id.

    Returns (best, evaluations) with evaluations sorted by run id.
    """
    good = sorted((o for o in outcomes if o.ok), key=lambda o: o.run_id)
    if not good:
        raise EmptyInputError("no successful candidates to select from")
    evals = [
        mc_evaluate(problem, o.control, n_mc, stream.derive("candidate", o.run_id),
                    run_id=o.run_id, q_select=q_select)
        for o in good
    ]
    best = evals[0]
    for ev in evals[1:]:
        if ev.selection_cost < best.selection_cost:
            best = ev
    return best, evals


def simplex_representative(outcomes) -> RestartOutcome:
    """The restart with the lowest final observed (noisy) cost."""
    good = sorted((o for o in outcomes if o.ok), key=lambda o: o.run_id)
    if not good:
        raise EmptyInputError("no successful simplex runs")
    best = good[0]
    for o in good[1:]:
        if o.observed_cost < best.observed_cost:
            best = o
    return best


def default_trajectory_positions(line_length: float, stations=None) -> np.ndarray:
    """1 m grid along the line plus the cost stations."""
    base = np.arange(0.0, math.floor(line_length) + 1.0)
    extra = [p for p, _ in (stations or ())]
    return np.unique(np.concatenate([base, np.asarray(extra, dtype=float),
                                     [line_length]]))


def trajectory_bands(problem: Problem, control, n: int, positions,
                     stream: RandomStream) -> PercentileBands:
    """Per-position quantile envelopes of the gauged distance over n draws."""
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0 or np.any(np.diff(positions) <= 0):
        raise ValueError("positions must be non-empty and ascending")
    control = np.asarray(control, dtype=float)
    seeds = stream.child_seeds("mc", np.arange(n))
    U = sample_uncertain_for_seeds(problem.dists, seeds)
    P = problem.model.space.assemble_batch(control, U)
    D = gauged_distance_grid(problem.model, problem.geometry, P, positions)
    D.sort(axis=0)
    bands = {"min": D[0].copy()}
    for key, q in QUANTILE_LEVELS:
        k = min(max(math.ceil(q * n), 1), n)
        bands[key] = D[k - 1].copy()
    bands["max"] = D[-1].copy()
    return PercentileBands(positions, bands)

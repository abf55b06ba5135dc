"""Deterministic box-bounded pattern search (compass search).

Greedy coordinate probes with a halving step schedule; no randomness, so a
given (function, start, schedule) always walks the same path.  Used for GP
hyperparameter fitting and for polishing acquisition optima.
"""

from __future__ import annotations

import numpy as np


def pattern_search(fun, x0, lower, upper, step: float, step_min: float,
                   max_evals: int):
    """Minimize `fun` over the box; returns (x, f(x)).

    Probes +/- `step` along each coordinate, moves to the best strict
    improvement, halves the step when none improves, and stops below
    `step_min` or at the evaluation budget.  Never returns a point worse
    than the start.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    f = float(fun(x))
    evals = 1
    while step >= step_min and evals < max_evals:
        best_x, best_f = None, f
        for j in range(x.size):
            for sign in (1.0, -1.0):
                if evals >= max_evals:
                    break
                xt = x.copy()
                xt[j] = min(max(xt[j] + sign * step, lower[j]), upper[j])
                if xt[j] == x[j]:
                    continue
                ft = float(fun(xt))
                evals += 1
                if ft < best_f:
                    best_f, best_x = ft, xt
        if best_x is None:
            step *= 0.5
        else:
            x, f = best_x, best_f
    return x, f

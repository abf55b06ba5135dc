"""Alternating least squares fitting of the separable surrogate.

Fits the sum-of-products form by cyclically re-solving, for one input at a
time, the linear least-squares problem in that input's tabulated node values
(all terms jointly) while every other factor stays fixed.  Each update is an
exact least-squares minimization over its coordinate block, so the training
loss never increases between sweeps.  Term weights are renormalized each
sweep so every factor has unit root-mean-square, which pins the scale
indeterminacy of the product form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import DomainError, EmptyDatasetError, SingularSolveError
from .parameter_space import ParameterSpace
from .rom import (POSITION_INPUT, REQUIRED_OUTPUTS, Factor, GaugedGeometry,
                  RomModel, Term, TrainingDataset)
from .streams import RandomStream

DEFAULT_POSITION_NODES = 64
DEFAULT_PARAM_NODES = 17
_RIDGE_SCALE = 1e-10


@dataclass
class AlsFit:
    """Terms for one output plus fit diagnostics."""

    terms: list
    rmse: float
    loss_history: list
    sweeps_run: int


def default_grids(space: ParameterSpace, line_length: float,
                  position_nodes: int = DEFAULT_POSITION_NODES,
                  param_nodes: int = DEFAULT_PARAM_NODES) -> dict:
    """Equispaced node grids spanning each input's declared range exactly."""
    grids = {POSITION_INPUT: np.linspace(0.0, line_length, position_nodes)}
    for s in space.specs:
        grids[s.name] = np.linspace(s.lower, s.upper, param_nodes)
    return grids


def _interp_structure(x: np.ndarray, grid: np.ndarray):
    """Cell index and barycentric weight of each sample on the grid."""
    if np.any(x < grid[0]) or np.any(x > grid[-1]):
        raise DomainError("training sample outside its grid span")
    j = np.clip(np.searchsorted(grid, x, side="right") - 1, 0, grid.size - 2)
    t = (x - grid[j]) / (grid[j + 1] - grid[j])
    return j.astype(np.int32), t


def _solve_block(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve the normal equations, falling back to a tiny ridge when singular."""
    try:
        return scipy.linalg.cho_solve(
            scipy.linalg.cho_factor(G, lower=True, check_finite=False), rhs,
            check_finite=False)
    except np.linalg.LinAlgError:
        pass
    ridge = _RIDGE_SCALE * float(np.mean(np.diag(G)))
    try:
        sol = scipy.linalg.cho_solve(
            scipy.linalg.cho_factor(G + ridge * np.eye(G.shape[0]), lower=True,
                                    check_finite=False), rhs, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularSolveError(f"normal equations singular even with ridge: {exc}") from None
    if not np.all(np.isfinite(sol)):
        raise SingularSolveError("non-finite least-squares solution")
    return sol


def fit_als(data: TrainingDataset, space: ParameterSpace, output: str,
            n_terms: int, grids: dict, max_sweeps: int = 100,
            tol: float = 1e-13, init_seed: int = 0,
            target_rmse: float | None = None) -> AlsFit:
    """Fit one output's terms by alternating least squares.

    Parameters
    ----------
    data:
        Long-form training rows; only rows for `output` are used.
    grids:
        Node arrays keyed by input name (position plus every parameter),
        each strictly increasing and spanning the input range.
    tol:
        Stop when the relative per-sweep loss decrease falls below this.
    target_rmse:
        Optional early exit once the training RMSE reaches this level.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    positions, inputs, y = data.rows_for(output)
    npts = positions.shape[0]
    if npts == 0:
        raise EmptyDatasetError(f"no training rows for output {output!r}")

    input_names = (POSITION_INPUT,) + tuple(space.names)
    columns = [positions] + [inputs[:, k] for k in range(len(space.names))]
    try:
        grid_list = [np.asarray(grids[name], dtype=float) for name in input_names]
    except KeyError as exc:
        raise ValueError(f"missing grid for input {exc.args[0]!r}") from None
    for name, grid in zip(input_names, grid_list):
        if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
            raise ValueError(f"grid for {name!r} must be strictly increasing, >= 2 nodes")

    n_inputs = len(input_names)
    M = n_terms
    cells, weights_lo, col_index, indptr = [], [], [], []
    for grid, x in zip(grid_list, columns):
        j, t = _interp_structure(x, grid)
        cells.append((j, t))
        g = grid.size
        # fixed sparsity of the per-input design matrix: 2 nodes per term per row
        base = (np.arange(M, dtype=np.int32) * g)[None, :, None]
        idx = base + np.stack([j, j + 1], axis=-1).astype(np.int32)[:, None, :]
        col_index.append(np.ascontiguousarray(idx.reshape(npts, -1)))
        weights_lo.append(np.stack([1.0 - t, t], axis=-1))
        indptr.append(np.arange(npts + 1, dtype=np.int64) * (2 * M))

    init = RandomStream(init_seed).derive("als-init")
    values = []
    for grid in grid_list:
        v = 0.5 + init.uniforms(M * grid.size).reshape(M, grid.size)
        v /= np.sqrt(np.mean(v**2, axis=1))[:, None]
        values.append(v)

    def interp_factor(n: int) -> np.ndarray:
        j, t = cells[n]
        v = values[n]
        return v[:, j] * (1.0 - t) + v[:, j + 1] * t

    F = [interp_factor(n) for n in range(n_inputs)]

    # initial weights from a single least-squares solve over weights alone
    T = np.ones((M, npts))
    for n in range(n_inputs):
        T *= F[n]
    w, *_ = np.linalg.lstsq(T.T, y, rcond=None)

    def current_loss() -> float:
        prod = np.ones((M, npts))
        for n in range(n_inputs):
            prod *= F[n]
        resid = y - w @ prod
        return float(resid @ resid)

    loss_history = [current_loss()]
    sweeps_run = 0
    for sweep in range(max_sweeps):
        sweeps_run = sweep + 1
        suffix = [None] * (n_inputs + 1)
        suffix[n_inputs] = np.ones((M, npts))
        for n in range(n_inputs - 1, -1, -1):
            suffix[n] = suffix[n + 1] * F[n]
        left = np.ones((M, npts))
        for n in range(n_inputs):
            others = left * suffix[n + 1]
            g = grid_list[n].size
            dat = others.T[:, :, None] * weights_lo[n][:, None, :]
            A = scipy.sparse.csr_matrix(
                (dat.reshape(-1), col_index[n].reshape(-1), indptr[n]),
                shape=(npts, M * g))
            G = (A.T @ A).toarray()
            rhs = A.T @ y
            beta = _solve_block(G, rhs).reshape(M, g)
            scale = np.sqrt(np.mean(beta**2, axis=1))
            w = scale.copy()
            nz = scale > 0
            beta[nz] /= scale[nz, None]
            values[n] = beta
            F[n] = interp_factor(n)
            left = left * F[n]

        # per-sweep renormalization: every factor to unit rms, scale in weights
        for n in range(n_inputs):
            scale = np.sqrt(np.mean(values[n] ** 2, axis=1))
            nz = scale > 0
            values[n][nz] /= scale[nz, None]
            w[nz] *= scale[nz]
            if np.any(nz):
                F[n] = interp_factor(n)

        loss = current_loss()
        loss_history.append(loss)
        rmse = np.sqrt(loss / npts)
        if target_rmse is not None and rmse <= target_rmse:
            break
        prev = loss_history[-2]
        if prev <= 0.0 or (prev - loss) < tol * prev:
            break

    terms = [
        Term(w[m], (Factor(name, grid, values[n][m])
                    for n, (name, grid) in enumerate(zip(input_names, grid_list))))
        for m in range(M)
    ]
    return AlsFit(terms=terms, rmse=float(np.sqrt(loss_history[-1] / npts)),
                  loss_history=loss_history, sweeps_run=sweeps_run)


def fit_rom(data: TrainingDataset, space: ParameterSpace, geometry: GaugedGeometry,
            line_length: float, outputs=None, n_terms: int = 8,
            position_nodes: int = DEFAULT_POSITION_NODES,
            param_nodes: int = DEFAULT_PARAM_NODES,
            max_sweeps: int = 200, tol: float = 1e-13, init_seed: int = 0,
            target_rmse: float | None = None):
    """Fit every requested output and assemble the surrogate model.

    Returns (model, {output: AlsFit}).
    """
    if outputs is None:
        present = set(np.unique(data.output_names).tolist())
        outputs = [n for n in REQUIRED_OUTPUTS if n in present]
        outputs += sorted(present - set(REQUIRED_OUTPUTS))
    grids = default_grids(space, line_length, position_nodes, param_nodes)
    seed_root = RandomStream(init_seed)
    fitted, fits = {}, {}
    for k, name in enumerate(outputs):
        fit = fit_als(data, space, name, n_terms, grids, max_sweeps=max_sweeps,
                      tol=tol, init_seed=seed_root.derive("als-output", k).seed,
                      target_rmse=target_rmse)
        fitted[name] = fit.terms
        fits[name] = fit
    model = RomModel(line_length, space, fitted, geometry)
    return model, fits

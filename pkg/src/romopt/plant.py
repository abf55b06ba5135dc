"""Closed-form synthetic ground truth for the gauged-point displacements.

Stands in for the proprietary process simulator: a deterministic, exactly
separable response surface producing the four displacement outputs consumed
by the quality objective.  The functional form is

    output(s, p) = g(s) * (c0 + sum_j a_j * p~_j + sum_(j,k) b_jk * p~_j * p~_k)

with ``s = position / line_length``, longitudinal profile ``g(s) = 3 s^2 -
2 s^3`` and ``p~`` the unit-scaled parameters.  Coefficients are version
"plant-v1" and frozen; any change must bump the version tag.  The plant is
noise-free: all stochasticity enters through the uncertain-parameter
distributions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .errors import DomainError, UnknownOutputError
from .parameter_space import ParameterSpace, default_space
from .rom import GaugedGeometry, TrainingDataset
from .streams import RandomStream

PLANT_OUTPUTS = ("dx1", "dy1", "dx2", "dy2")

# unit-scaled parameter indices in canonical order
_V, _PB, _PS, _RPM, _IR, _MW, _G1, _G2, _F = range(9)


@dataclass(frozen=True)
class PlantSpec:
    """Versioned coefficient table of the synthetic plant."""

    version: str
    line_length: float
    geometry: GaugedGeometry
    constant: dict
    linear: dict       # output -> (9,) coefficients on unit-scaled parameters
    bilinear: dict     # output -> ((j, k, coeff), ...)


PLANT_V1 = PlantSpec(
    version="plant-v1",
    line_length=105.85,
    geometry=GaugedGeometry(0.0, 0.0, 10.0, 5.0),
    constant={"dx1": 0.05, "dy1": 0.10, "dx2": -0.05, "dy2": 0.20},
    linear={
        "dx1": np.array([0.0, 0.0, 0.0, 0.0, 0.4, -0.1, 0.3, 0.2, -0.5]),
        "dy1": np.array([-0.15, 0.2, -0.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.3]),
        "dx2": np.array([0.0, 0.0, 0.0, 0.1, -0.3, 0.0, -0.2, 0.0, 0.0]),
        "dy2": np.array([0.2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.25, -0.3]),
    },
    bilinear={
        "dx1": (),
        "dy1": (),
        "dx2": ((_F, _MW, 0.4),),
        "dy2": ((_PB, _RPM, 0.15),),
    },
)


def _profile(spec: PlantSpec, positions) -> np.ndarray:
    s = np.asarray(positions, dtype=float) / spec.line_length
    return 3.0 * s**2 - 2.0 * s**3


def plant_eval(output: str, position, p, spec: PlantSpec = PLANT_V1,
               space: ParameterSpace | None = None):
    """Plant displacement (mm) at a line position for a full input.

    ``position`` and ``p`` broadcast: either a single (9,) input or a batch
    (n, 9) against matching positions.
    """
    if output not in PLANT_OUTPUTS:
        raise UnknownOutputError(f"unknown plant output {output!r}")
    space = space or default_space()
    positions = np.asarray(position, dtype=float)
    if np.any((positions < 0.0) | (positions > spec.line_length)):
        raise DomainError(f"position outside [0, {spec.line_length}]")
    q = space.scale_to_unit(p)
    inner = np.full(q.shape[:-1], spec.constant[output])
    inner = inner + q @ spec.linear[output]
    for j, k, coeff in spec.bilinear[output]:
        inner = inner + coeff * q[..., j] * q[..., k]
    out = _profile(spec, positions) * inner
    return float(out) if np.ndim(out) == 0 else out


def generate_dataset(n_points: int, stream: RandomStream,
                     spec: PlantSpec = PLANT_V1,
                     space: ParameterSpace | None = None,
                     position_grid=None) -> TrainingDataset:
    """Scrambled low-discrepancy plant samples, one row per point per output.

    When ``position_grid`` is given, sampled positions are snapped to the
    nearest grid node so the longitudinal profile is exactly representable
    on that grid (surrogate fits then reach the training data exactly).
    """
    if n_points < 1:
        raise ValueError("n_points must be at least 1")
    space = space or default_space()
    rng = np.random.default_rng(stream.derive("design").integer_seed())
    sampler = qmc.Halton(d=1 + len(space), scramble=True, seed=rng)
    sample = sampler.random(n_points)
    positions = sample[:, 0] * spec.line_length
    if position_grid is not None:
        grid = np.asarray(position_grid, dtype=float)
        positions = grid[np.argmin(np.abs(positions[:, None] - grid[None, :]), axis=1)]
    P = space.lower + sample[:, 1:] * space.span

    n_out = len(PLANT_OUTPUTS)
    inputs = np.repeat(P, n_out, axis=0)
    pos_rows = np.repeat(positions, n_out)
    names = np.tile(np.array(PLANT_OUTPUTS), n_points)
    values = np.empty(n_points * n_out)
    for k, output in enumerate(PLANT_OUTPUTS):
        values[k::n_out] = plant_eval(output, positions, P, spec=spec, space=space)
    return TrainingDataset(inputs, pos_rows, names, values,
                           provenance=f"{spec.version} n_points={n_points}")

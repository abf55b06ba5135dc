"""Gauged-distance geometry and the stochastic quality cost.

The quality measure is the Euclidean distance between two gauged profile
points after deformation.  The cost tracks that distance against a set
point at three late-line stations with decreasing weights and adds a small
penalty on the unit-scaled control vector (an unscaled norm would mix Pa
with degrees C):

    J(c, u) = sum_k w_k * (d_k - r)^2  +  alpha * ||c_unit||_2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rom
from .rom import GaugedGeometry, RomModel
from .streams import RandomStream
from .uncertainty import DistributionSpec, sample_uncertain, truncated_ppf

DEFAULT_STATIONS = ((105.85, 1.0), (100.85, 0.5), (95.85, 0.25))
DEFAULT_ALPHA = 1e-4

__all__ = [
    "GaugedGeometry", "CostSpec", "DEFAULT_STATIONS", "DEFAULT_ALPHA",
    "gauged_distance", "gauged_distance_batch", "gauged_distance_grid",
    "cost", "cost_batch", "stochastic_cost", "auto_setpoint",
]


@dataclass(frozen=True)
class CostSpec:
    """Set point (mm), weighted stations (m), and control-penalty strength."""

    setpoint: float
    stations: tuple = DEFAULT_STATIONS
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if not np.isfinite(self.setpoint):
            raise ValueError("setpoint must be finite")
        if len(self.stations) == 0:
            raise ValueError("at least one station is required")
        if any(w <= 0 for _, w in self.stations):
            raise ValueError("station weights must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


def gauged_distance_grid(model: RomModel, geometry: GaugedGeometry,
                         P, positions) -> np.ndarray:
    """Distance between the deformed gauged points, (n inputs, m positions)."""
    dx = (geometry.x0_2 - geometry.x0_1) \
        + rom.evaluate_grid(model, "dx2", positions, P) \
        - rom.evaluate_grid(model, "dx1", positions, P)
    dy = (geometry.y0_2 - geometry.y0_1) \
        + rom.evaluate_grid(model, "dy2", positions, P) \
        - rom.evaluate_grid(model, "dy1", positions, P)
    return np.hypot(dx, dy)


def gauged_distance_batch(model, geometry, P, position: float) -> np.ndarray:
    """Distance at a single position for a batch of inputs, shape (n,)."""
    return gauged_distance_grid(model, geometry, P, np.array([position]))[:, 0]


def gauged_distance(model, geometry, p, position: float) -> float:
    """Distance (mm) between the deformed gauged points at one position."""
    return float(gauged_distance_batch(model, geometry,
                                       np.asarray(p, dtype=float)[None, :], position))


def _station_positions(spec: CostSpec) -> np.ndarray:
    return np.array([pos for pos, _ in spec.stations], dtype=float)


def _station_weights(spec: CostSpec) -> np.ndarray:
    return np.array([w for _, w in spec.stations], dtype=float)


def control_penalty(model: RomModel, spec: CostSpec, c) -> float:
    """alpha times the L2 norm (un-squared) of the unit-scaled control."""
    return spec.alpha * float(np.linalg.norm(model.space.scale_control_to_unit(c)))


def cost_batch(model: RomModel, geometry: GaugedGeometry, spec: CostSpec,
               c, U) -> np.ndarray:
    """Cost of one control vector against a batch of uncertain draws."""
    P = model.space.assemble_batch(c, U)
    d = gauged_distance_grid(model, geometry, P, _station_positions(spec))
    tracking = ((d - spec.setpoint) ** 2) @ _station_weights(spec)
    return tracking + control_penalty(model, spec, c)


def cost(model, geometry, spec, c, u) -> float:
    """Deterministic cost for one (control, uncertain) pair; non-negative."""
    return float(cost_batch(model, geometry, spec, c, np.asarray(u, dtype=float)[None, :]))


def stochastic_cost(model, geometry, spec, c,
                    dists: tuple[DistributionSpec, ...],
                    stream: RandomStream) -> float:
    """Cost with the uncertain inputs drawn fresh from the stream.

    Consecutive calls consume the stream, so replaying the same stream
    replays the same costs.
    """
    u = sample_uncertain(dists, stream)
    return cost(model, geometry, spec, c, u)


def auto_setpoint(model: RomModel, geometry: GaugedGeometry,
                  dists: tuple[DistributionSpec, ...]) -> float:
    """End-of-line distance at nominal controls and median uncertain inputs."""
    space = model.space
    idx = space.controllable_idx
    c = 0.5 * (space.lower[idx] + space.upper[idx])
    u = np.array([truncated_ppf(d, 0.5) for d in dists])
    return gauged_distance(model, geometry, space.assemble_full(c, u), model.line_length)

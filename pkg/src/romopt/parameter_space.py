"""The nine-parameter process domain and its unit-cube scaling.

All vectors, files and CSV columns follow one canonical parameter order
(the reference line's instrumentation order): extrusion speed, big-cavity
pressure, small-cavity pressure, RPM ratio, infrared heat, microwave heat,
gas-oven-1 temperature, gas-oven-2 temperature, foaming expansion
coefficient.  Six parameters are controllable set points, three are
uncertain inputs drawn at random per production run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

ROLE_CONTROLLABLE = "controllable"
ROLE_UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class ParameterSpec:
    """One process parameter: closed physical bounds plus its role."""

    name: str
    role: str
    lower: float
    upper: float
    unit: str = ""

    def __post_init__(self):
        if self.role not in (ROLE_CONTROLLABLE, ROLE_UNCERTAIN):
            raise ValueError(f"{self.name}: unknown role {self.role!r}")
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError(f"{self.name}: bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower bound must be below upper bound")


class ParameterSpace:
    """Ordered, immutable collection of :class:`ParameterSpec`.

    Provides the unit-cube scaling used by every numeric component and the
    split/assemble maps between full inputs and their controllable and
    uncertain sub-vectors.  Bounds checks are closed-interval and exact.
    """

    def __init__(self, specs):
        specs = tuple(specs)
        names = [s.name for s in specs]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        self.specs = specs
        self.names = tuple(names)
        self.lower = np.array([s.lower for s in specs], dtype=float)
        self.upper = np.array([s.upper for s in specs], dtype=float)
        self.span = self.upper - self.lower
        self.controllable_idx = np.array(
            [i for i, s in enumerate(specs) if s.role == ROLE_CONTROLLABLE], dtype=int
        )
        self.uncertain_idx = np.array(
            [i for i, s in enumerate(specs) if s.role == ROLE_UNCERTAIN], dtype=int
        )

    def __len__(self) -> int:
        return len(self.specs)

    def __eq__(self, other) -> bool:
        return isinstance(other, ParameterSpace) and self.specs == other.specs

    def __hash__(self):
        return hash(self.specs)

    @property
    def n_controllable(self) -> int:
        return len(self.controllable_idx)

    @property
    def n_uncertain(self) -> int:
        return len(self.uncertain_idx)

    @property
    def controllable_names(self) -> tuple:
        return tuple(self.names[i] for i in self.controllable_idx)

    @property
    def uncertain_names(self) -> tuple:
        return tuple(self.names[i] for i in self.uncertain_idx)

    def _check(self, values, idx, what: str) -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape[-1] != len(idx):
            raise DomainError(f"{what}: expected {len(idx)} components, got {arr.shape[-1]}")
        lo, hi = self.lower[idx], self.upper[idx]
        bad = (arr < lo) | (arr > hi) | ~np.isfinite(arr)
        if np.any(bad):
            j = int(np.argwhere(bad)[0][-1])
            name = self.names[idx[j]]
            raise DomainError(
                f"{what}: {name} out of bounds "
                f"[{lo[j]}, {hi[j]}] (value along axis: see component {j})"
            )
        return arr

    def check_full(self, p) -> np.ndarray:
        """Validate a full input (or batch of inputs); returns float array."""
        return self._check(p, np.arange(len(self.specs)), "full input")

    def check_control(self, c) -> np.ndarray:
        return self._check(c, self.controllable_idx, "control vector")

    def check_uncertain(self, u) -> np.ndarray:
        return self._check(u, self.uncertain_idx, "uncertain vector")

    def scale_to_unit(self, p) -> np.ndarray:
        """Map a full input to [0, 1]^n; DomainError if out of bounds."""
        arr = self.check_full(p)
        return (arr - self.lower) / self.span

    def unscale_from_unit(self, q) -> np.ndarray:
        """Inverse of :meth:`scale_to_unit`; DomainError if q leaves [0, 1]."""
        arr = np.asarray(q, dtype=float)
        if arr.shape[-1] != len(self.specs):
            raise DomainError(f"unit vector: expected {len(self.specs)} components")
        if np.any((arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr)):
            raise DomainError("unit vector: component outside [0, 1]")
        return self.lower + arr * self.span

    def scale_control_to_unit(self, c) -> np.ndarray:
        arr = self.check_control(c)
        idx = self.controllable_idx
        return (arr - self.lower[idx]) / self.span[idx]

    def unscale_control_from_unit(self, q) -> np.ndarray:
        arr = np.asarray(q, dtype=float)
        idx = self.controllable_idx
        if arr.shape[-1] != len(idx):
            raise DomainError(f"unit control vector: expected {len(idx)} components")
        if np.any((arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr)):
            raise DomainError("unit control vector: component outside [0, 1]")
        return self.lower[idx] + arr * self.span[idx]

    def assemble_full(self, c, u) -> np.ndarray:
        """Interleave control and uncertain vectors into canonical order."""
        c = self.check_control(c)
        u = self.check_uncertain(u)
        p = np.empty(len(self.specs), dtype=float)
        p[self.controllable_idx] = c
        p[self.uncertain_idx] = u
        return p

    def assemble_batch(self, c, U) -> np.ndarray:
        """One control vector against a batch of uncertain vectors, (n, len)."""
        c = self.check_control(c)
        U = self.check_uncertain(np.atleast_2d(U))
        P = np.empty((U.shape[0], len(self.specs)), dtype=float)
        P[:, self.controllable_idx] = c
        P[:, self.uncertain_idx] = U
        return P

    def split(self, p):
        """Inverse of :meth:`assemble_full`: (control, uncertain)."""
        arr = self.check_full(p)
        return arr[..., self.controllable_idx], arr[..., self.uncertain_idx]

    def to_json_obj(self) -> list:
        return [
            {"name": s.name, "role": s.role, "lower": s.lower, "upper": s.upper, "unit": s.unit}
            for s in self.specs
        ]

    @classmethod
    def from_json_obj(cls, obj) -> "ParameterSpace":
        return cls(
            ParameterSpec(d["name"], d["role"], float(d["lower"]), float(d["upper"]),
                          d.get("unit", ""))
            for d in obj
        )


def default_space() -> ParameterSpace:
    """The reference extrusion line's parameter set (value-plus-range bounds)."""
    return ParameterSpace([
        ParameterSpec("extrusion_speed", ROLE_UNCERTAIN, 15.0, 25.0, "m/min"),
        ParameterSpec("pressure_big_cavity", ROLE_CONTROLLABLE, 1200.0, 1800.0, "Pa"),
        ParameterSpec("pressure_small_cavity", ROLE_CONTROLLABLE, 100.0, 700.0, "Pa"),
        # the 10% tolerance on the nominal 0.335 ratio is relative
        ParameterSpec("rpm_ratio", ROLE_CONTROLLABLE, 0.3015, 0.3685, "-"),
        ParameterSpec("infrared_heat", ROLE_CONTROLLABLE, 0.80, 1.10, "-"),
        ParameterSpec("microwave_heat", ROLE_UNCERTAIN, 0.10, 1.00, "-"),
        ParameterSpec("gas_oven_1_temp", ROLE_CONTROLLABLE, 280.0, 480.0, "degC"),
        ParameterSpec("gas_oven_2_temp", ROLE_CONTROLLABLE, 250.0, 450.0, "degC"),
        ParameterSpec("foaming_expansion", ROLE_UNCERTAIN, 0.025, 0.230, "-"),
    ])

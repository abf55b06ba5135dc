"""Truncated input distributions and their deterministic sampling.

Uncertain inputs are modeled as normal or lognormal variables hard-truncated
to the parameter's physical bounds.  Sampling goes through the inverse CDF of
the truncated distribution, ``x = F^-1(F(lo) + U * (F(hi) - F(lo)))``, so one
uniform deviate from a :class:`~romopt.streams.RandomStream` maps to exactly
one sample and determinism is preserved draw for draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError, DomainError
from .parameter_space import ParameterSpace
from .streams import RandomStream, uniforms_for_seeds

KIND_NORMAL = "normal"
KIND_LOGNORMAL = "lognormal"


@dataclass(frozen=True)
class DistributionSpec:
    """Truncated (log)normal marginal for one uncertain input.

    ``mu`` and ``sigma`` parametrize the underlying normal; for the
    lognormal kind they apply to the log of the variable.  ``lo``/``hi``
    is the hard truncation window, normally the parameter's bounds.
    """

    name: str
    kind: str
    mu: float
    sigma: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in (KIND_NORMAL, KIND_LOGNORMAL):
            raise ValueError(f"{self.name}: unknown distribution kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError(f"{self.name}: sigma must be positive")
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: truncation window is empty")
        if self.kind == KIND_LOGNORMAL and self.lo <= 0:
            raise ValueError(f"{self.name}: lognormal truncation must be positive")
        if not self._cdf_raw(self.hi) > self._cdf_raw(self.lo):
            raise ValueError(f"{self.name}: truncated probability mass is zero")

    def _z(self, x):
        if self.kind == KIND_LOGNORMAL:
            return (np.log(x) - self.mu) / self.sigma
        return (np.asarray(x, dtype=float) - self.mu) / self.sigma

    def _cdf_raw(self, x):
        return ndtr(self._z(x))

    def _ppf_raw(self, p):
        z = ndtri(p)
        if self.kind == KIND_LOGNORMAL:
            return np.exp(self.mu + self.sigma * z)
        return self.mu + self.sigma * z


def truncated_cdf(spec: DistributionSpec, x):
    """CDF of the truncated distribution; 0 at lo, 1 at hi.

    Raises DomainError for arguments outside the truncation window.
    """
    arr = np.asarray(x, dtype=float)
    if np.any((arr < spec.lo) | (arr > spec.hi) | ~np.isfinite(arr)):
        raise DomainError(f"{spec.name}: argument outside [{spec.lo}, {spec.hi}]")
    c_lo = spec._cdf_raw(spec.lo)
    c_hi = spec._cdf_raw(spec.hi)
    out = (spec._cdf_raw(arr) - c_lo) / (c_hi - c_lo)
    return np.clip(out, 0.0, 1.0) if arr.ndim else float(min(max(out, 0.0), 1.0))


def truncated_ppf(spec: DistributionSpec, q):
    """Quantile of the truncated distribution; results clipped to [lo, hi]."""
    q = np.asarray(q, dtype=float)
    c_lo = spec._cdf_raw(spec.lo)
    c_hi = spec._cdf_raw(spec.hi)
    x = spec._ppf_raw(c_lo + q * (c_hi - c_lo))
    out = np.clip(x, spec.lo, spec.hi)
    return out if out.ndim else float(out)


def sample_uncertain(specs: Sequence[DistributionSpec], stream: RandomStream) -> np.ndarray:
    """One draw per spec via inverse-CDF; consumes len(specs) uniforms."""
    u = stream.uniforms(len(specs))
    return np.array([truncated_ppf(spec, ui) for spec, ui in zip(specs, u)])


def sample_uncertain_for_seeds(specs: Sequence[DistributionSpec], seeds: np.ndarray) -> np.ndarray:
    """Vectorized draws, one row per stream seed.

    Row i equals ``sample_uncertain(specs, stream_i)`` where ``stream_i``
    is the stream with seed ``seeds[i]``.
    """
    u = uniforms_for_seeds(seeds, len(specs))
    out = np.empty_like(u)
    for j, spec in enumerate(specs):
        out[:, j] = truncated_ppf(spec, u[:, j])
    return out


def default_distributions(space: ParameterSpace) -> tuple[DistributionSpec, ...]:
    """The reference line's uncertain-input distributions, truncated to bounds."""
    params = {
        "extrusion_speed": (KIND_NORMAL, 20.0, 0.5),
        "microwave_heat": (KIND_NORMAL, 0.55, 0.08),
        "foaming_expansion": (KIND_LOGNORMAL, math.log(0.08), 0.262),
    }
    specs = []
    for i in space.uncertain_idx:
        name = space.names[i]
        if name not in params:
            raise ConfigError(f"no default distribution for uncertain parameter {name!r}")
        kind, mu, sigma = params[name]
        specs.append(DistributionSpec(name, kind, mu, sigma,
                                      float(space.lower[i]), float(space.upper[i])))
    return tuple(specs)

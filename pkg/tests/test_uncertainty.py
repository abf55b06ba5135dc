import math

import numpy as np
import pytest

from romopt.errors import DomainError
from romopt.parameter_space import default_space
from romopt.streams import RandomStream
from romopt.uncertainty import (DistributionSpec, default_distributions,
                                sample_uncertain, sample_uncertain_for_seeds,
                                truncated_cdf, truncated_ppf)


@pytest.fixture(scope="module")
def dists():
    return default_distributions(default_space())


def ks_statistic(samples, cdf):
    x = np.sort(samples)
    n = x.size
    F = cdf(x)
    upper = np.max(np.arange(1, n + 1) / n - F)
    lower = np.max(F - np.arange(0, n) / n)
    return max(upper, lower)


def test_defaults_match_the_uncertain_parameters(dists):
    by_name = {d.name: d for d in dists}
    speed = by_name["extrusion_speed"]
    assert (speed.kind, speed.mu, speed.sigma) == ("normal", 20.0, 0.5)
    assert (speed.lo, speed.hi) == (15.0, 25.0)
    mw = by_name["microwave_heat"]
    assert (mw.kind, mw.mu, mw.sigma) == ("normal", 0.55, 0.08)
    foam = by_name["foaming_expansion"]
    assert foam.kind == "lognormal"
    assert foam.mu == pytest.approx(math.log(0.08))
    assert foam.sigma == 0.262
    assert (foam.lo, foam.hi) == (0.025, 0.230)


def test_cdf_endpoints_and_monotonicity(dists):
    for d in dists:
        assert truncated_cdf(d, d.lo) == 0.0
        assert truncated_cdf(d, d.hi) == 1.0
        xs = np.linspace(d.lo, d.hi, 257)
        F = truncated_cdf(d, xs)
        assert np.all(np.diff(F) >= 0)
    with pytest.raises(DomainError):
        truncated_cdf(dists[0], dists[0].lo - 1e-9)


def test_cdf_examples(dists):
    speed, _, foam = dists
    assert truncated_cdf(speed, 20.0) == pytest.approx(0.5, abs=1e-12)
    assert truncated_cdf(foam, 0.08) == pytest.approx(0.5, abs=1e-3)


def test_ppf_inverts_cdf(dists):
    for d in dists:
        qs = np.linspace(0.001, 0.999, 101)
        xs = truncated_ppf(d, qs)
        assert np.all((xs >= d.lo) & (xs <= d.hi))
        assert np.allclose(truncated_cdf(d, xs), qs, atol=1e-9)


def test_samples_stay_in_bounds_and_replay(dists):
    s1 = RandomStream(31).derive("u")
    draws = np.array([sample_uncertain(dists, s1) for _ in range(2000)])
    for j, d in enumerate(dists):
        assert draws[:, j].min() >= d.lo and draws[:, j].max() <= d.hi
    s2 = RandomStream(31).derive("u")
    again = np.array([sample_uncertain(dists, s2) for _ in range(2000)])
    assert np.array_equal(draws, again)


def test_vectorized_sampling_matches_scalar(dists):
    root = RandomStream(8)
    seeds = root.child_seeds("mc", np.arange(64))
    U = sample_uncertain_for_seeds(dists, seeds)
    for i in (0, 5, 63):
        assert np.array_equal(U[i], sample_uncertain(dists, root.derive("mc", i)))


def test_speed_mean_matches_truncated_moment(dists):
    # symmetric +/-10 sigma truncation leaves the mean at mu
    seeds = RandomStream(101).child_seeds("mc", np.arange(100_000))
    U = sample_uncertain_for_seeds(dists, seeds)
    assert abs(U[:, 0].mean() - 20.0) < 0.02


def test_ks_statistic_against_truncated_cdf(dists):
    seeds = RandomStream(7).child_seeds("mc", np.arange(100_000))
    U = sample_uncertain_for_seeds(dists, seeds)
    for j, d in enumerate(dists):
        ks = ks_statistic(U[:, j], lambda x, d=d: truncated_cdf(d, x))
        assert ks < 0.01, f"{d.name}: KS={ks}"


def test_lognormal_log_domain_normality(dists):
    foam = dists[2]
    seeds = RandomStream(13).child_seeds("mc", np.arange(100_000))
    logs = np.log(sample_uncertain_for_seeds([foam], seeds)[:, 0])
    log_normal = DistributionSpec("log_foam", "normal", foam.mu, foam.sigma,
                                  math.log(foam.lo), math.log(foam.hi))
    ks = ks_statistic(logs, lambda x: truncated_cdf(log_normal, x))
    assert ks < 0.01


def test_degenerate_sigma_gives_point_mass(dists):
    speed = dists[0]
    tight = DistributionSpec("s", "normal", speed.mu, 1e-300, speed.lo, speed.hi)
    s = RandomStream(3).derive("pm")
    a = sample_uncertain([tight], s)
    b = sample_uncertain([tight], s)
    assert a[0] == b[0] == speed.mu


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        DistributionSpec("x", "normal", 0.0, 0.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        DistributionSpec("x", "normal", 0.0, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        DistributionSpec("x", "lognormal", 0.0, 1.0, -0.5, 1.0)
    with pytest.raises(ValueError):
        DistributionSpec("x", "triangular", 0.0, 1.0, 0.0, 1.0)

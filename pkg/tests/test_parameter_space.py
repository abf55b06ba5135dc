import numpy as np
import pytest

from romopt.errors import DomainError
from romopt.parameter_space import ParameterSpec, ParameterSpace, default_space
from romopt.streams import RandomStream


@pytest.fixture
def space():
    return default_space()


def test_default_space_roles_and_order(space):
    assert space.n_controllable == 6
    assert space.n_uncertain == 3
    assert space.names == (
        "extrusion_speed", "pressure_big_cavity", "pressure_small_cavity",
        "rpm_ratio", "infrared_heat", "microwave_heat", "gas_oven_1_temp",
        "gas_oven_2_temp", "foaming_expansion")
    assert space.uncertain_names == ("extrusion_speed", "microwave_heat",
                                     "foaming_expansion")


def test_default_bounds_match_value_plus_minus_range(space):
    expected = {
        "extrusion_speed": (20 - 5, 20 + 5),
        "pressure_big_cavity": (1500 - 300, 1500 + 300),
        "pressure_small_cavity": (400 - 300, 400 + 300),
        "rpm_ratio": (0.3015, 0.3685),       # 0.335 +/- 10% relative
        "infrared_heat": (0.80, 1.10),
        "microwave_heat": (0.10, 1.00),
        "gas_oven_1_temp": (380 - 100, 380 + 100),
        "gas_oven_2_temp": (350 - 100, 350 + 100),
        "foaming_expansion": (0.025, 0.230),
    }
    for s in space.specs:
        assert (s.lower, s.upper) == expected[s.name]


def test_scaling_examples(space):
    mid = 0.5 * (space.lower + space.upper)
    p = mid.copy()
    p[1] = 1500.0
    assert space.scale_to_unit(p)[1] == 0.5
    p[1] = 1800.0
    assert space.scale_to_unit(p)[1] == 1.0
    p[0] = 15.0
    assert space.scale_to_unit(p)[0] == 0.0
    q = np.full(9, 0.5)
    assert space.unscale_from_unit(q)[5] == pytest.approx(0.55)
    q[8] = 0.0
    assert space.unscale_from_unit(q)[8] == 0.025


def test_roundtrip_property(space):
    stream = RandomStream(11)
    P = space.lower + stream.uniforms(1000 * 9).reshape(1000, 9) * space.span
    back = space.unscale_from_unit(space.scale_to_unit(P))
    assert np.allclose(back, P, rtol=1e-12, atol=0.0)


def test_out_of_bounds_raises(space):
    p = 0.5 * (space.lower + space.upper)
    p[6] = 500.0           # above the 480 upper bound
    with pytest.raises(DomainError):
        space.scale_to_unit(p)
    with pytest.raises(DomainError):
        space.unscale_from_unit(np.full(9, 1.0 + 1e-12))


def test_assemble_and_split_are_inverse(space):
    c = 0.5 * (space.lower + space.upper)[space.controllable_idx]
    u = 0.5 * (space.lower + space.upper)[space.uncertain_idx]
    p = space.assemble_full(c, u)
    assert np.array_equal(p, 0.5 * (space.lower + space.upper))
    c2, u2 = space.split(p)
    assert np.array_equal(c, c2) and np.array_equal(u, u2)


def test_assemble_rejects_out_of_bounds_control(space):
    c = 0.5 * (space.lower + space.upper)[space.controllable_idx]
    u = 0.5 * (space.lower + space.upper)[space.uncertain_idx]
    c = c.copy()
    c[4] = 500.0           # gas oven 1 above bound
    with pytest.raises(DomainError):
        space.assemble_full(c, u)


def test_assemble_batch_matches_scalar(space):
    c = space.lower[space.controllable_idx].copy()
    stream = RandomStream(4)
    lo = space.lower[space.uncertain_idx]
    hi = space.upper[space.uncertain_idx]
    U = lo + stream.uniforms(15).reshape(5, 3) * (hi - lo)
    batch = space.assemble_batch(c, U)
    for i in range(5):
        assert np.array_equal(batch[i], space.assemble_full(c, U[i]))


def test_spec_invariants():
    with pytest.raises(ValueError):
        ParameterSpec("x", "controllable", 2.0, 1.0)
    with pytest.raises(ValueError):
        ParameterSpec("x", "other", 0.0, 1.0)
    with pytest.raises(ValueError):
        ParameterSpace([ParameterSpec("x", "controllable", 0.0, 1.0),
                        ParameterSpec("x", "uncertain", 0.0, 1.0)])

import numpy as np
import pytest

from romopt.errors import DomainError, UnknownOutputError
from romopt.parameter_space import default_space
from romopt.plant import PLANT_OUTPUTS, PLANT_V1, generate_dataset, plant_eval
from romopt.streams import RandomStream


@pytest.fixture(scope="module")
def space():
    return default_space()


def nominal_input(space):
    c = 0.5 * (space.lower + space.upper)[space.controllable_idx]
    u = np.array([20.0, 0.55, 0.08])
    return space.assemble_full(c, u)


def test_outputs_vanish_at_line_start(space):
    p = nominal_input(space)
    for out in PLANT_OUTPUTS:
        assert plant_eval(out, 0.0, p) == 0.0


def test_end_of_line_values_at_nominal(space):
    p = nominal_input(space)
    assert plant_eval("dx1", 105.85, p) == pytest.approx(0.31585, abs=1e-5)
    assert plant_eval("dy1", 105.85, p) == pytest.approx(0.15549, abs=1e-5)
    assert plant_eval("dx2", 105.85, p) == pytest.approx(-0.19634, abs=1e-5)
    assert plant_eval("dy2", 105.85, p) == pytest.approx(0.13201, abs=1e-5)
    dx = (10.0 + plant_eval("dx2", 105.85, p)) - plant_eval("dx1", 105.85, p)
    dy = (5.0 + plant_eval("dy2", 105.85, p)) - plant_eval("dy1", 105.85, p)
    assert np.hypot(dx, dy) == pytest.approx(10.7138, abs=1e-3)


def test_response_is_affine_in_infrared(space):
    p = nominal_input(space)
    pos = 70.0
    s = pos / PLANT_V1.line_length
    g = 3 * s**2 - 2 * s**3
    span = space.span[4]
    deltas = []
    for h in (0.01, 0.05, 0.2):
        hi = p.copy(); hi[4] += h
        lo = p.copy(); lo[4] -= h
        deltas.append((plant_eval("dx1", pos, hi) - plant_eval("dx1", pos, lo)) / (2 * h))
    assert np.allclose(deltas, 0.4 * g / span, rtol=1e-12)


def test_domain_checks(space):
    p = nominal_input(space)
    with pytest.raises(DomainError):
        plant_eval("dx1", 106.0, p)
    bad = p.copy(); bad[0] = 30.0
    with pytest.raises(DomainError):
        plant_eval("dx1", 50.0, bad)
    with pytest.raises(UnknownOutputError):
        plant_eval("temperature_field", 50.0, p)


def test_dataset_shape_and_values(space):
    data = generate_dataset(250, RandomStream(5))
    assert len(data) == 4 * 250
    for i in range(0, len(data), 97):
        out = str(data.output_names[i])
        recomputed = plant_eval(out, data.positions[i], data.inputs[i])
        assert data.values[i] == recomputed
    assert np.all(data.inputs >= space.lower) and np.all(data.inputs <= space.upper)
    assert data.positions.min() >= 0 and data.positions.max() <= PLANT_V1.line_length


def test_dataset_is_deterministic():
    a = generate_dataset(100, RandomStream(9))
    b = generate_dataset(100, RandomStream(9))
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.values, b.values)


def test_dataset_position_snapping():
    grid = np.linspace(0.0, PLANT_V1.line_length, 64)
    data = generate_dataset(300, RandomStream(2), position_grid=grid)
    assert set(np.unique(data.positions)).issubset(set(grid))

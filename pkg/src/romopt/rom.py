"""Separable reduced-order surrogate: representation, evaluation, files.

Each output of the surrogate is a weighted sum of terms, and each term is a
product of one-dimensional factors, one per model input (line position plus
the nine process parameters)::

    output(x) = sum_m  weight_m * prod_n  f_{m,n}(x_n)

Factors are tabulated on strictly increasing grids and evaluated by
piecewise-linear interpolation; grids span exactly the declared input range,
so any query outside the range is an extrapolation error, never a silent
clamp.  Models are immutable after construction and safe to share across
workers.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtrapolationError, FormatError, UnknownOutputError
from .parameter_space import ParameterSpace

FORMAT_VERSION = "1"
POSITION_INPUT = "position"
REQUIRED_OUTPUTS = ("dx1", "dy1", "dx2", "dy2")


@dataclass(frozen=True)
class GaugedGeometry:
    """Start-of-line coordinates (mm) of the two gauged profile points."""

    x0_1: float
    y0_1: float
    x0_2: float
    y0_2: float

    def __post_init__(self):
        coords = (self.x0_1, self.y0_1, self.x0_2, self.y0_2)
        if not all(np.isfinite(c) for c in coords):
            raise ValueError("gauged coordinates must be finite")
        if self.x0_1 == self.x0_2 and self.y0_1 == self.y0_2:
            raise ValueError("gauged points must be distinct")


class Factor:
    """One tabulated 1-D function of a named input."""

    __slots__ = ("input", "grid", "values")

    def __init__(self, input: str, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError(f"factor {input!r}: grid needs at least 2 nodes")
        if not np.all(np.diff(grid) > 0):
            raise ValueError(f"factor {input!r}: grid must be strictly increasing")
        if values.shape != grid.shape:
            raise ValueError(f"factor {input!r}: values/grid length mismatch")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise ValueError(f"factor {input!r}: non-finite entries")
        self.input = input
        self.grid = grid
        self.values = values
        self.grid.flags.writeable = False
        self.values.flags.writeable = False

    def __call__(self, x):
        """Piecewise-linear interpolation; extrapolation is an error."""
        x = np.asarray(x, dtype=float)
        if np.any((x < self.grid[0]) | (x > self.grid[-1]) | ~np.isfinite(x)):
            raise ExtrapolationError(
                f"input {self.input!r} outside grid span "
                f"[{self.grid[0]}, {self.grid[-1]}]"
            )
        return np.interp(x, self.grid, self.values)

    def __eq__(self, other):
        return (
            isinstance(other, Factor)
            and self.input == other.input
            and np.array_equal(self.grid, other.grid)
            and np.array_equal(self.values, other.values)
        )


class Term:
    """A weighted product of factors, exactly one per model input."""

    __slots__ = ("weight", "factors")

    def __init__(self, weight: float, factors):
        self.weight = float(weight)
        self.factors = tuple(factors)
        names = [f.input for f in self.factors]
        if len(set(names)) != len(names):
            raise ValueError("term has duplicate factor inputs")

    def __eq__(self, other):
        return (
            isinstance(other, Term)
            and self.weight == other.weight
            and self.factors == other.factors
        )


class RomModel:
    """Immutable separable surrogate over (position, process parameters)."""

    def __init__(self, line_length: float, space: ParameterSpace, outputs: dict,
                 geometry: GaugedGeometry, format_version: str = FORMAT_VERSION):
        if not (np.isfinite(line_length) and line_length > 0):
            raise ValueError("line_length must be positive and finite")
        self.line_length = float(line_length)
        self.space = space
        self.geometry = geometry
        self.format_version = str(format_version)
        self.input_names = (POSITION_INPUT,) + tuple(space.names)
        ranges = {POSITION_INPUT: (0.0, self.line_length)}
        for s in space.specs:
            ranges[s.name] = (s.lower, s.upper)
        normalized = {}
        for out_name, terms in outputs.items():
            fixed = []
            for t_i, term in enumerate(terms):
                by_input = {f.input: f for f in term.factors}
                if set(by_input) != set(self.input_names):
                    missing = set(self.input_names) - set(by_input)
                    extra = set(by_input) - set(self.input_names)
                    raise ValueError(
                        f"output {out_name!r} term {t_i}: factor inputs do not "
                        f"cover the model inputs (missing {sorted(missing)}, "
                        f"unexpected {sorted(extra)})"
                    )
                for f in term.factors:
                    lo, hi = ranges[f.input]
                    if f.grid[0] != lo or f.grid[-1] != hi:
                        raise ValueError(
                            f"output {out_name!r} term {t_i}: factor {f.input!r} grid "
                            f"[{f.grid[0]}, {f.grid[-1]}] does not span the declared "
                            f"range [{lo}, {hi}]"
                        )
                # canonical factor order speeds up evaluation
                fixed.append(Term(term.weight, (by_input[n] for n in self.input_names)))
            normalized[out_name] = tuple(fixed)
        self.outputs = normalized

    @property
    def output_names(self) -> tuple:
        return tuple(self.outputs)

    def _terms(self, output: str):
        try:
            return self.outputs[output]
        except KeyError:
            raise UnknownOutputError(
                f"unknown output {output!r}; model has {sorted(self.outputs)}"
            ) from None

    def __eq__(self, other):
        return (
            isinstance(other, RomModel)
            and self.line_length == other.line_length
            and self.space == other.space
            and self.geometry == other.geometry
            and self.format_version == other.format_version
            and self.outputs == other.outputs
        )


def evaluate(model: RomModel, output: str, position: float, p) -> float:
    """Surrogate value at one position and one full parameter input."""
    res = evaluate_batch(model, output, np.array([position], dtype=float),
                         np.asarray(p, dtype=float)[None, :])
    return float(res[0])


def evaluate_batch(model: RomModel, output: str, positions, P) -> np.ndarray:
    """Row-wise evaluation: positions (n,), P (n, n_params) -> (n,)."""
    terms = model._terms(output)
    positions = np.asarray(positions, dtype=float)
    P = np.asarray(P, dtype=float)
    total = np.zeros(positions.shape[0])
    for term in terms:
        acc = np.full(positions.shape[0], term.weight)
        acc *= term.factors[0](positions)
        for j, factor in enumerate(term.factors[1:]):
            acc *= factor(P[:, j])
        total += acc
    return total


def evaluate_grid(model: RomModel, output: str, positions, P) -> np.ndarray:
    """Separable outer-product evaluation: (n_inputs rows) x (m positions).

    Returns an (n, m) array; exploits the fact that the position factor is
    the only one varying along the second axis.
    """
    terms = model._terms(output)
    positions = np.asarray(positions, dtype=float)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    n = P.shape[0]
    A = np.empty((n, len(terms)))
    B = np.empty((len(terms), positions.shape[0]))
    for m, term in enumerate(terms):
        acc = np.full(n, term.weight)
        for j, factor in enumerate(term.factors[1:]):
            acc *= factor(P[:, j])
        A[:, m] = acc
        B[m] = term.factors[0](positions)
    return A @ B


@dataclass
class TrainingDataset:
    """Long-form training rows: one (input, position, output, value) per row."""

    inputs: np.ndarray          # (n, n_params) physical units
    positions: np.ndarray       # (n,) meters
    output_names: np.ndarray    # (n,) strings
    values: np.ndarray          # (n,)
    provenance: str = ""

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.output_names = np.asarray(self.output_names)
        self.values = np.asarray(self.values, dtype=float)
        n = self.positions.shape[0]
        if not (self.inputs.shape[0] == n == self.output_names.shape[0] == self.values.shape[0]):
            raise ValueError("dataset column lengths differ")

    def __len__(self) -> int:
        return int(self.positions.shape[0])

    def rows_for(self, output: str):
        """(positions, inputs, values) restricted to one output."""
        mask = self.output_names == output
        return self.positions[mask], self.inputs[mask], self.values[mask]


def _format_float(x: float) -> str:
    return repr(float(x))


def write_dataset_csv(data: TrainingDataset, space: ParameterSpace, path) -> None:
    """Dataset wire format: position_m, parameters in canonical order, output, value_mm."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["position_m", *space.names, "output", "value_mm"])
        for i in range(len(data)):
            writer.writerow(
                [_format_float(data.positions[i])]
                + [_format_float(v) for v in data.inputs[i]]
                + [str(data.output_names[i]), _format_float(data.values[i])]
            )


def read_dataset_csv(path, space: ParameterSpace) -> TrainingDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty dataset file") from None
        expected = ["position_m", *space.names, "output", "value_mm"]
        if header != expected:
            raise FormatError(f"{path}: header mismatch, expected {expected}")
        positions, inputs, names, values = [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise FormatError(f"{path}:{lineno}: expected {len(expected)} fields")
            try:
                positions.append(float(row[0]))
                inputs.append([float(v) for v in row[1:-2]])
                values.append(float(row[-1]))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            names.append(row[-2])
    return TrainingDataset(np.array(inputs), np.array(positions),
                           np.array(names), np.array(values), provenance=str(path))


def _model_to_obj(model: RomModel) -> dict:
    return {
        "format_version": model.format_version,
        "line_length_m": model.line_length,
        "parameters": model.space.to_json_obj(),
        "outputs": {
            name: [
                {
                    "weight": term.weight,
                    "factors": [
                        {"input": f.input, "grid": f.grid.tolist(), "values": f.values.tolist()}
                        for f in term.factors
                    ],
                }
                for term in terms
            ]
            for name, terms in model.outputs.items()
        },
        "metadata": {
            "gauged_geometry": {
                "x0_1": model.geometry.x0_1,
                "y0_1": model.geometry.y0_1,
                "x0_2": model.geometry.x0_2,
                "y0_2": model.geometry.y0_2,
            }
        },
    }


def save(model: RomModel, path) -> None:
    """Write the model as a JSON document with full-precision reals."""
    if hasattr(path, "write"):
        json.dump(_model_to_obj(model), path, indent=1)
    else:
        with open(path, "w") as fh:
            json.dump(_model_to_obj(model), fh, indent=1)


def load(path) -> RomModel:
    """Read a model file; malformed content raises FormatError with context."""
    try:
        if hasattr(path, "read"):
            obj = json.load(path)
        else:
            with open(path) as fh:
                obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None
    return _model_from_obj(obj, source=str(path))


def _model_from_obj(obj, source: str) -> RomModel:
    def fail(where: str, why: str):
        raise FormatError(f"{source}: {where}: {why}")

    if not isinstance(obj, dict):
        fail("document", "expected a JSON object")
    for key in ("format_version", "line_length_m", "parameters", "outputs", "metadata"):
        if key not in obj:
            fail("document", f"missing field {key!r}")
    try:
        space = ParameterSpace.from_json_obj(obj["parameters"])
    except (ValueError, KeyError, TypeError) as exc:
        fail("parameters", str(exc))
    geo = obj["metadata"].get("gauged_geometry")
    if not isinstance(geo, dict):
        fail("metadata.gauged_geometry", "missing or not an object")
    try:
        geometry = GaugedGeometry(float(geo["x0_1"]), float(geo["y0_1"]),
                                  float(geo["x0_2"]), float(geo["y0_2"]))
    except (KeyError, ValueError, TypeError) as exc:
        fail("metadata.gauged_geometry", str(exc))
    outputs = {}
    for name, terms_obj in obj["outputs"].items():
        terms = []
        for t_i, term_obj in enumerate(terms_obj):
            where = f"outputs.{name}[{t_i}]"
            if "weight" not in term_obj or "factors" not in term_obj:
                fail(where, "term needs 'weight' and 'factors'")
            factors = []
            for f_i, f_obj in enumerate(term_obj["factors"]):
                try:
                    factors.append(Factor(f_obj["input"], f_obj["grid"], f_obj["values"]))
                except (ValueError, KeyError, TypeError) as exc:
                    fail(f"{where}.factors[{f_i}]", str(exc))
            try:
                terms.append(Term(float(term_obj["weight"]), factors))
            except (ValueError, TypeError) as exc:
                fail(where, str(exc))
        outputs[name] = terms
    try:
        return RomModel(float(obj["line_length_m"]), space, outputs, geometry,
                        format_version=str(obj["format_version"]))
    except (ValueError, TypeError) as exc:
        fail("document", str(exc))


def dumps(model: RomModel) -> str:
    buf = io.StringIO()
    save(model, buf)
    return buf.getvalue()

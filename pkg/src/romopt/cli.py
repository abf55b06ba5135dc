"""Command-line entry point: dataset generation, fitting, optimization.

Configuration comes from a JSON file plus flag overrides (flag > file >
profile > default).  Every command writes a manifest next to its outputs
recording the resolved configuration, seed, package and library versions,
and input-file hashes, which is enough to reproduce any output byte for
byte.  CSV reals are written with full round-trip precision.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__, als, rom
from .errors import (ConfigError, DomainError, EmptyInputError,
                     ExtrapolationError, FormatError, IllConditionedError,
                     RomoptError, SingularSolveError, UnknownOutputError)
from .objective import DEFAULT_ALPHA, DEFAULT_STATIONS
from .optimizers import BoOptions, NmOptions
from .parameter_space import default_space
from .pipeline import (METHOD_BAYES, METHOD_SIMPLEX, BAND_KEYS,
                       default_trajectory_positions, make_problem,
                       mc_evaluate, run_restarts, select_best,
                       simplex_representative, trajectory_bands)
from .plant import PLANT_V1, generate_dataset
from .streams import RandomStream
from .uncertainty import DistributionSpec, default_distributions

SEED_ENV_VAR = "ROMOPT_SEED"

_PROFILES = {
    "ci": {"restarts": 20, "budget": 60, "mc_samples": 2000},
    "paper": {"restarts": 100, "budget": 100, "mc_samples": 10000},
}

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DOMAIN = 3
EXIT_NUMERIC = 4


@dataclass
class RunConfig:
    seed: int = 1
    seed_source: str = "default"
    profile: str = "ci"
    method: str = METHOD_BAYES
    restarts: int = 20
    budget: int = 60
    mc_samples: int = 2000
    n_init: int = 8
    n_candidates: int = 4096
    q: float = 0.99
    alpha: float = DEFAULT_ALPHA
    setpoint: object = "auto"
    stations: tuple = DEFAULT_STATIONS
    trajectory_positions: tuple | None = None
    workers: int = 1
    n_points: int = 50000
    grid_aligned: bool = True
    als: dict = field(default_factory=lambda: {
        "terms": 8, "position_nodes": 64, "param_nodes": 17,
        "sweeps": 200, "tol": 1e-13, "seed": 0, "target_rmse": 1e-7,
    })
    nm: dict = field(default_factory=lambda: {
        "max_iter": 500, "tol": 1e-8, "penalty": 1e3, "init_edge": 0.1,
    })
    gp: dict = field(default_factory=lambda: {
        "noise_floor": 1e-8, "log_transform": False,
        "lengthscale_bounds": [1e-2, 10.0], "signal_bounds": [1e-4, 100.0],
        "noise_upper": 1.0,
    })
    distributions: dict = field(default_factory=dict)
    control_bounds: dict = field(default_factory=dict)

    def bo_options(self) -> BoOptions:
        return BoOptions(
            budget=self.budget, n_init=self.n_init,
            n_candidates=self.n_candidates,
            noise_floor=float(self.gp["noise_floor"]),
            log_transform=bool(self.gp["log_transform"]),
            ls_bounds=tuple(self.gp["lengthscale_bounds"]),
            signal_bounds=tuple(self.gp["signal_bounds"]),
            noise_upper=float(self.gp["noise_upper"]),
        )

    def nm_options(self) -> NmOptions:
        return NmOptions(
            max_iter=int(self.nm["max_iter"]), tol=float(self.nm["tol"]),
            penalty=float(self.nm["penalty"]),
            init_edge=float(self.nm["init_edge"]),
        )

    def to_json_obj(self) -> dict:
        obj = {}
        for key in ("seed", "seed_source", "profile", "method", "restarts",
                    "budget", "mc_samples", "n_init", "n_candidates", "q",
                    "alpha", "setpoint", "workers", "n_points", "grid_aligned",
                    "als", "nm", "gp", "distributions", "control_bounds"):
            obj[key] = getattr(self, key)
        obj["stations"] = [list(s) for s in self.stations]
        obj["trajectory_positions"] = (
            None if self.trajectory_positions is None
            else list(self.trajectory_positions))
        return obj


def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")

    profile = getattr(args, "profile", None) or file_cfg.get("profile") or cfg.profile
    if profile not in _PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; expected ci or paper")
    cfg.profile = profile
    for key, value in _PROFILES[profile].items():
        setattr(cfg, key, value)

    known = set(RunConfig.__dataclass_fields__) - {"seed_source"}
    for key, value in file_cfg.items():
        if key == "profile":
            continue
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if key in ("als", "nm", "gp"):
            merged = dict(getattr(cfg, key))
            if not isinstance(value, dict):
                raise ConfigError(f"config key {key!r} must be an object")
            for sub, sub_value in value.items():
                if sub not in merged:
                    raise ConfigError(f"unknown config key {key}.{sub}")
                merged[sub] = sub_value
            value = merged
        if key == "stations":
            value = tuple((float(p), float(w)) for p, w in value)
        if key == "trajectory_positions" and value is not None:
            value = tuple(float(p) for p in value)
        setattr(cfg, key, value)
        if key == "seed":
            cfg.seed_source = "config"

    if getattr(args, "seed", None) is not None:
        cfg.seed, cfg.seed_source = args.seed, "flag"
    elif cfg.seed_source == "default" and os.environ.get(SEED_ENV_VAR):
        try:
            cfg.seed = int(os.environ[SEED_ENV_VAR])
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from None
        cfg.seed_source = "env"
    for flag in ("method", "workers", "restarts", "budget", "mc_samples",
                 "n_points"):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, flag, value)
    if getattr(args, "continuous_positions", False):
        cfg.grid_aligned = False
    if getattr(args, "terms", None) is not None:
        cfg.als = dict(cfg.als, terms=args.terms)
    if getattr(args, "sweeps", None) is not None:
        cfg.als = dict(cfg.als, sweeps=args.sweeps)

    _validate_config(cfg)
    return cfg


def _validate_config(cfg: RunConfig) -> None:
    for key in ("restarts", "budget", "mc_samples", "n_init", "workers",
                "n_points"):
        if int(getattr(cfg, key)) < 1:
            raise ConfigError(f"{key} must be at least 1")
    if not 0.0 < float(cfg.q) <= 1.0:
        raise ConfigError("q must lie in (0, 1]")
    if float(cfg.alpha) < 0:
        raise ConfigError("alpha must be non-negative")
    if cfg.method not in (METHOD_BAYES, METHOD_SIMPLEX, "both"):
        raise ConfigError(f"unknown method {cfg.method!r}")
    if cfg.setpoint != "auto":
        try:
            float(cfg.setpoint)
        except (TypeError, ValueError):
            raise ConfigError("setpoint must be a number or 'auto'") from None
    if cfg.budget < cfg.n_init:
        raise ConfigError("budget must cover the initial design size")


def _format_float(x) -> str:
    return repr(float(x))


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _format_float(v)
                             for v in row])


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command, cfg: RunConfig, inputs, outputs,
                    extra=None) -> None:
    manifest = {
        "tool": {"name": "romopt", "version": __version__},
        "command": command,
        "argv": sys.argv[1:] if sys.argv else [],
        "config": cfg.to_json_obj(),
        "versions": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest["result"] = extra
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _distributions_for(cfg: RunConfig, space):
    base = {d.name: d for d in default_distributions(space)}
    for name, params in cfg.distributions.items():
        if name not in base:
            raise ConfigError(f"distribution override for unknown uncertain "
                              f"parameter {name!r}")
        ref = base[name]
        base[name] = DistributionSpec(
            name, params.get("kind", ref.kind),
            float(params.get("mu", ref.mu)),
            float(params.get("sigma", ref.sigma)), ref.lo, ref.hi)
    return tuple(base[space.names[i]] for i in space.uncertain_idx)


def _problem_from(cfg: RunConfig, model):
    dists = _distributions_for(cfg, model.space)
    search_lower = search_upper = None
    if cfg.control_bounds:
        space = model.space
        idx = space.controllable_idx
        lo, hi = space.lower[idx].copy(), space.upper[idx].copy()
        names = list(space.controllable_names)
        for name, bounds in cfg.control_bounds.items():
            if name not in names:
                raise ConfigError(f"control_bounds names unknown controllable "
                                  f"parameter {name!r}")
            j = names.index(name)
            b_lo, b_hi = float(bounds[0]), float(bounds[1])
            if not b_lo < b_hi:
                raise ConfigError(f"control_bounds for {name!r} are empty")
            if b_lo < lo[j] or b_hi > hi[j]:
                raise DomainError(
                    f"control bound for {name!r} [{b_lo}, {b_hi}] lies outside "
                    f"the model's parameter range [{lo[j]}, {hi[j]}]")
            lo[j], hi[j] = b_lo, b_hi
        search_lower, search_upper = lo, hi
    return make_problem(model, setpoint=cfg.setpoint, stations=cfg.stations,
                        alpha=cfg.alpha, dists=dists,
                        search_lower=search_lower, search_upper=search_upper)


def _parse_control(text: str, space) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != space.n_controllable:
        raise ConfigError(f"--control needs {space.n_controllable} "
                          f"comma-separated values")
    try:
        return np.array([float(p) for p in parts])
    except ValueError as exc:
        raise ConfigError(f"--control: {exc}") from None


def _candidate_rows(evals):
    for ev in evals:
        q = ev.cost_quantiles
        yield [str(ev.run_id), q["min"], q["p1"], q["p25"], q["p50"],
               q["p75"], q["p99"], q["max"], ev.mean_cost]


def _selection_obj(ev, method, cfg: RunConfig, problem) -> dict:
    return {
        "method": method,
        "run_id": ev.run_id,
        "control": [float(v) for v in ev.control],
        "control_names": list(problem.model.space.controllable_names),
        "n_samples": ev.n_samples,
        "cost_quantiles": ev.cost_quantiles,
        "mean_cost": ev.mean_cost,
        "distance_quantiles": ev.distance_quantiles,
        "selection_percentile": cfg.q,
        "selection_cost": ev.selection_cost,
        "setpoint": problem.cost_spec.setpoint,
    }


def _run_method(cfg: RunConfig, problem, method: str):
    """Restarts plus robust selection for one method; returns (best, evals)."""
    outcomes = run_restarts(problem, method, cfg.restarts, cfg.seed,
                            bo_options=cfg.bo_options(),
                            nm_options=cfg.nm_options(),
                            n_workers=cfg.workers)
    select_stream = RandomStream(cfg.seed).derive(f"select-{method}")
    if method == METHOD_SIMPLEX:
        rep = simplex_representative(outcomes)
        best = mc_evaluate(problem, rep.control, cfg.mc_samples,
                           select_stream.derive("candidate", rep.run_id),
                           run_id=rep.run_id, q_select=cfg.q)
        return best, [best]
    return select_best(outcomes, problem, cfg.mc_samples, select_stream,
                       q_select=cfg.q)


def _cmd_synth_plant(args) -> int:
    cfg = _build_config(args)
    os.makedirs(args.out, exist_ok=True)
    space = default_space()
    grid = None
    if cfg.grid_aligned:
        grid = als.default_grids(space, PLANT_V1.line_length,
                                 int(cfg.als["position_nodes"]),
                                 int(cfg.als["param_nodes"]))[rom.POSITION_INPUT]
    stream = RandomStream(cfg.seed).derive("plant-data")
    data = generate_dataset(cfg.n_points, stream, space=space, position_grid=grid)
    out_path = os.path.join(args.out, "dataset.csv")
    rom.write_dataset_csv(data, space, out_path)
    _write_manifest(args.out, "synth-plant", cfg, [], ["dataset.csv"],
                    extra={"rows": len(data), "provenance": data.provenance})
    print(f"wrote {out_path} ({len(data)} rows)")
    return EXIT_OK


def _cmd_fit_rom(args) -> int:
    cfg = _build_config(args)
    os.makedirs(args.out, exist_ok=True)
    space = default_space()
    data = rom.read_dataset_csv(args.dataset, space)
    model, fits = als.fit_rom(
        data, space, PLANT_V1.geometry, PLANT_V1.line_length,
        n_terms=int(cfg.als["terms"]),
        position_nodes=int(cfg.als["position_nodes"]),
        param_nodes=int(cfg.als["param_nodes"]),
        max_sweeps=int(cfg.als["sweeps"]), tol=float(cfg.als["tol"]),
        init_seed=int(cfg.als["seed"]),
        target_rmse=cfg.als["target_rmse"])
    out_path = os.path.join(args.out, "rom.json")
    rom.save(model, out_path)
    rmse = {name: fit.rmse for name, fit in fits.items()}
    _write_manifest(args.out, "fit-rom", cfg, [args.dataset], ["rom.json"],
                    extra={"training_rmse": rmse})
    for name, fit in fits.items():
        print(f"{name}: rmse={fit.rmse:.3e} sweeps={fit.sweeps_run}")
    print(f"wrote {out_path}")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    cfg = _build_config(args)
    if cfg.method == "both":
        raise ConfigError("optimize runs one method; use the compare command")
    os.makedirs(args.out, exist_ok=True)
    model = rom.load(args.rom)
    problem = _problem_from(cfg, model)
    best, evals = _run_method(cfg, problem, cfg.method)
    boxplot_path = os.path.join(args.out, "boxplot.csv")
    _write_csv(boxplot_path,
               ["run_id", "min", "p1", "p25", "p50", "p75", "p99", "max", "mean"],
               _candidate_rows(evals))
    selection_path = os.path.join(args.out, "selection.json")
    with open(selection_path, "w") as fh:
        json.dump(_selection_obj(best, cfg.method, cfg, problem), fh, indent=2,
                  sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, "optimize", cfg, [args.rom],
                    ["boxplot.csv", "selection.json"])
    print(f"selected run {best.run_id}: "
          f"P{int(round(cfg.q * 100))}={best.selection_cost:.6g}")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = _build_config(args)
    os.makedirs(args.out, exist_ok=True)
    model = rom.load(args.rom)
    problem = _problem_from(cfg, model)
    rows = []
    details = {}
    for method in (METHOD_BAYES, METHOD_SIMPLEX):
        best, _ = _run_method(cfg, problem, method)
        rows.append([method, best.cost_quantiles["p99"],
                     best.cost_quantiles["p50"]])
        details[method] = _selection_obj(best, method, cfg, problem)
    comparison_path = os.path.join(args.out, "comparison.csv")
    _write_csv(comparison_path, ["method", "p99", "median"], rows)
    _write_manifest(args.out, "compare", cfg, [args.rom], ["comparison.csv"],
                    extra=details)
    for method, p99, median in rows:
        print(f"{method}: p99={p99:.6g} median={median:.6g}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _build_config(args)
    os.makedirs(args.out, exist_ok=True)
    model = rom.load(args.rom)
    problem = _problem_from(cfg, model)
    control = _parse_control(args.control, model.space)
    stream = RandomStream(cfg.seed).derive("evaluate")
    ev = mc_evaluate(problem, control, cfg.mc_samples, stream, q_select=cfg.q)
    out_path = os.path.join(args.out, "evaluation.csv")
    rows = []
    for metric, q, mean in (("cost", ev.cost_quantiles, ev.mean_cost),
                            ("end_distance", ev.distance_quantiles, None)):
        mean_val = mean if mean is not None else float("nan")
        rows.append([metric, q["min"], q["p1"], q["p25"], q["p50"], q["p75"],
                     q["p99"], q["max"], mean_val])
    _write_csv(out_path, ["metric", "min", "p1", "p25", "p50", "p75", "p99",
                          "max", "mean"], rows)
    _write_manifest(args.out, "evaluate", cfg, [args.rom], ["evaluation.csv"])
    print(f"cost p99={ev.cost_quantiles['p99']:.6g} "
          f"median end distance={ev.distance_quantiles['p50']:.6g}")
    return EXIT_OK


def _cmd_trajectory(args) -> int:
    cfg = _build_config(args)
    os.makedirs(args.out, exist_ok=True)
    model = rom.load(args.rom)
    problem = _problem_from(cfg, model)
    control = _parse_control(args.control, model.space)
    positions = (np.asarray(cfg.trajectory_positions, dtype=float)
                 if cfg.trajectory_positions is not None
                 else default_trajectory_positions(model.line_length,
                                                   problem.cost_spec.stations))
    stream = RandomStream(cfg.seed).derive("trajectory")
    bands = trajectory_bands(problem, control, cfg.mc_samples, positions, stream)
    out_path = os.path.join(args.out, "bands.csv")
    _write_csv(out_path, ["position_m", *BAND_KEYS],
               ([bands.positions[i]] + [bands.bands[k][i] for k in BAND_KEYS]
                for i in range(bands.positions.size)))
    _write_manifest(args.out, "trajectory", cfg, [args.rom], ["bands.csv"])
    print(f"wrote {out_path} ({bands.positions.size} positions)")
    return EXIT_OK


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="romopt",
        description="Robust process-parameter optimization on a separable "
                    "reduced-order surrogate.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--seed", type=int, help="master random seed")
        p.add_argument("--profile", choices=sorted(_PROFILES),
                       help="scale preset: ci (default) or paper")
        p.add_argument("--workers", type=int, help="parallel worker count")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth-plant", help="emit a synthetic training dataset")
    common(p)
    p.add_argument("--n-points", type=int, dest="n_points",
                   help="number of sampled input points")
    p.add_argument("--continuous-positions", action="store_true",
                   help="do not snap positions to the fitting grid")
    p.set_defaults(func=_cmd_synth_plant)

    p = sub.add_parser("fit-rom", help="fit the surrogate from a dataset CSV")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--terms", type=int, help="terms per output")
    p.add_argument("--sweeps", type=int, help="maximum fitting sweeps")
    p.set_defaults(func=_cmd_fit_rom)

    p = sub.add_parser("optimize", help="restarted optimization plus robust "
                                        "candidate selection")
    common(p)
    p.add_argument("--rom", required=True)
    p.add_argument("--method", choices=[METHOD_BAYES, METHOD_SIMPLEX])
    p.add_argument("--restarts", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--mc-samples", type=int, dest="mc_samples")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("compare", help="robust-vs-simplex percentile table")
    common(p)
    p.add_argument("--rom", required=True)
    p.add_argument("--restarts", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--mc-samples", type=int, dest="mc_samples")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("evaluate", help="Monte-Carlo summary of one control "
                                        "vector")
    common(p)
    p.add_argument("--rom", required=True)
    p.add_argument("--control", required=True,
                   help="comma-separated controllable values, canonical order")
    p.add_argument("--mc-samples", type=int, dest="mc_samples")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("trajectory", help="percentile bands of the gauged "
                                          "distance along the line")
    common(p)
    p.add_argument("--rom", required=True)
    p.add_argument("--control", required=True)
    p.add_argument("--mc-samples", type=int, dest="mc_samples")
    p.set_defaults(func=_cmd_trajectory)
    return parser


def dispatch(argv=None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ExtrapolationError, UnknownOutputError,
            EmptyInputError) as exc:
        print(f"error: domain: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (SingularSolveError, IllConditionedError) as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except RomoptError as exc:
        print(f"error: numeric: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(dispatch())

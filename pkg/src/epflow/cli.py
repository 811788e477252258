"""Command-line front end.

    epflow <command> [--config FILE] [--section.key=VALUE ...] [--threads N]
                     [--output DIR] [--seed S]

Commands: kernel-verify, simulate, l1-distance, converge, picard. Every run
writes ``manifest.json`` with the fully resolved configuration; passing that
file back through ``--config`` reproduces the run. Failures leave
``error.json`` in the output directory and exit nonzero.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import re
import sys
from dataclasses import dataclass

import numpy as np
import yaml

from . import __version__, backend
from .dynamics import (
    convergence_experiment,
    evolve,
    passive_tracers,
    tracer_ring,
)
from .kernels import (
    GridSpec,
    LemmaSampleSpec,
    alpha_shape,
    blob_shape,
    build_shape,
    exact_shape,
    l1_kernel_distance,
    load_profile_csv,
    profile_by_name,
    shape_by_name,
    verify_kernel_lemmas,
)
from .measures import (
    discretize_patch,
    discretize_sheet,
    fmt,
    point_vortices,
    read_system_csv,
    write_system_csv,
)
from .picard import cauchy_report, picard_iterate

COMMANDS = ("kernel-verify", "simulate", "l1-distance", "converge", "picard")
BUILTIN_KERNELS = ("blob", "alpha", "exact")

DEFAULTS = {
    "kernel": {"name": "blob", "epsilon": 0.5, "grid_nodes": 2048},
    "initial_data": {"kind": "points"},
    "time": {"t_end": 1.0, "dt": 1e-3, "sample_every": 1},
    "experiment": {
        "eps_list": [0.4, 0.2, 0.1],
        "reference": "analytic",
        "check_dt": True,
        "check_spacing": False,
        "tracers": {"radius": 2.0, "count": 32},
        "n_max": 20,
        "tol": 1e-6,
        "compare_direct": True,
        "with_tracers": False,
        "n_points": 4000,
        "n_pairs": 10000,
    },
    "output": "epflow_out",
    "seed": 0,
}

INITIAL_DEFAULTS = {
    "points": {"positions": [[-0.5, 0.0], [0.5, 0.0]], "circulations": [2 * math.pi, 2 * math.pi]},
    "patch": {"profile": "rankine", "radius": 1.0, "omega": 1.0, "spacing": 0.1},
    "sheet": {"curve": "segment", "length": 2.0, "radius": 1.0, "strength": "uniform", "n": 64},
    "csv": {"path": None},
}


class _Loader(yaml.SafeLoader):
    """YAML 1.1 reads ``1e-6`` as a string; accept exponent floats without a dot."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def parse_value(text: str):
    return yaml.load(text, Loader=_Loader)


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


# ---------------------------------------------------------------- config

def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_path(cfg: dict, path: str, value) -> None:
    keys = path.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = parse_value(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a mapping")
    # a manifest wraps the resolved configuration
    if "config" in data and "epflow_version" in data:
        data = data["config"]
    return data


def resolve_config(file_cfg: dict, overrides: dict) -> dict:
    cfg = _merge(DEFAULTS, {k: v for k, v in file_cfg.items() if k != "initial_data"})
    init = file_cfg.get("initial_data", {})
    if not isinstance(init, dict):
        raise ConfigError("initial_data", "must be a mapping")
    cfg["initial_data"] = copy.deepcopy(init)
    for path, value in overrides.items():
        _set_path(cfg, path, value)
    kind = cfg["initial_data"].get("kind", "points")
    if kind not in INITIAL_DEFAULTS:
        raise ConfigError("initial_data.kind", f"must be one of {sorted(INITIAL_DEFAULTS)}, got {kind!r}")
    cfg["initial_data"] = _merge({"kind": kind, **INITIAL_DEFAULTS[kind]}, cfg["initial_data"])
    validate(cfg)
    return cfg


def _number(cfg, path, *, positive=False, integer=False, minimum=None):
    node = cfg
    for k in path.split("."):
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(path, "missing")
        node = node[k]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(path, f"expected a number, got {node!r}")
    if not math.isfinite(node):
        raise ConfigError(path, "must be finite")
    if integer and int(node) != node:
        raise ConfigError(path, "must be an integer")
    if positive and not node > 0:
        raise ConfigError(path, f"must be > 0, got {node!r}")
    if minimum is not None and node < minimum:
        raise ConfigError(path, f"must be >= {minimum}, got {node!r}")
    return node


def validate(cfg: dict) -> None:
    unknown = set(cfg) - set(DEFAULTS)
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown key")
    kern = cfg["kernel"]
    name = kern.get("name")
    if not isinstance(name, str) or not name:
        raise ConfigError("kernel.name", "must be a kernel name or a profile CSV path")
    if name not in BUILTIN_KERNELS and not os.path.isfile(name):
        raise ConfigError("kernel.name", f"not a built-in kernel {BUILTIN_KERNELS} or an existing file: {name!r}")
    if name != "exact":
        _number(cfg, "kernel.epsilon", positive=True)
    _number(cfg, "kernel.grid_nodes", integer=True, minimum=16)

    _number(cfg, "time.t_end", positive=True)
    _number(cfg, "time.dt", positive=True)
    _number(cfg, "time.sample_every", integer=True, minimum=1)

    exp = cfg["experiment"]
    eps = exp.get("eps_list")
    if not isinstance(eps, list) or len(eps) < 2:
        raise ConfigError("experiment.eps_list", "must be a list of at least two values")
    for i, e in enumerate(eps):
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not (math.isfinite(e) and e > 0):
            raise ConfigError(f"experiment.eps_list[{i}]", f"must be a positive number, got {e!r}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("experiment.eps_list", "must be strictly decreasing")
    if exp.get("reference") not in ("analytic", "exact", "richardson"):
        raise ConfigError("experiment.reference", "must be analytic, exact or richardson")
    if not isinstance(exp.get("check_dt"), bool):
        raise ConfigError("experiment.check_dt", "must be true or false")
    for flag in ("check_spacing", "compare_direct", "with_tracers"):
        if not isinstance(exp.get(flag), bool):
            raise ConfigError(f"experiment.{flag}", "must be true or false")
    _number(cfg, "experiment.tracers.radius", positive=True)
    _number(cfg, "experiment.tracers.count", integer=True, minimum=0)
    _number(cfg, "experiment.n_max", integer=True, minimum=1)
    _number(cfg, "experiment.tol", positive=True)
    _number(cfg, "experiment.n_points", integer=True, minimum=1)
    _number(cfg, "experiment.n_pairs", integer=True, minimum=1)

    init = cfg["initial_data"]
    kind = init["kind"]
    if kind == "points":
        pos, gam = init.get("positions"), init.get("circulations")
        try:
            arr = np.asarray(pos, dtype=float).reshape(-1, 2) if pos else np.zeros((0, 2))
        except (TypeError, ValueError):
            raise ConfigError("initial_data.positions", "must be a list of [x, y] pairs") from None
        if not isinstance(gam, list):
            raise ConfigError("initial_data.circulations", "must be a list of numbers")
        if len(gam) != arr.shape[0]:
            raise ConfigError("initial_data.circulations", f"{len(gam)} values for {arr.shape[0]} positions")
        if not np.all(np.isfinite(arr)):
            raise ConfigError("initial_data.positions", "must be finite")
    elif kind == "patch":
        if init.get("profile") not in ("rankine", "gaussian"):
            raise ConfigError("initial_data.profile", "must be rankine or gaussian")
        _number(cfg, "initial_data.radius", positive=True)
        _number(cfg, "initial_data.omega")
        _number(cfg, "initial_data.spacing", positive=True)
    elif kind == "sheet":
        if init.get("curve") not in ("segment", "circle"):
            raise ConfigError("initial_data.curve", "must be segment or circle")
        if init.get("strength") not in ("uniform", "elliptic"):
            raise ConfigError("initial_data.strength", "must be uniform or elliptic")
        _number(cfg, "initial_data.length", positive=True)
        _number(cfg, "initial_data.radius", positive=True)
        _number(cfg, "initial_data.n", integer=True, minimum=2)
    elif kind == "csv":
        path = init.get("path")
        if not isinstance(path, str) or not os.path.isfile(path):
            raise ConfigError("initial_data.path", f"not an existing file: {path!r}")

    if not isinstance(cfg.get("output"), str) or not cfg["output"]:
        raise ConfigError("output", "must be a directory path")
    _number(cfg, "seed", integer=True, minimum=0)


# ---------------------------------------------------------------- builders

@dataclass
class RunConfig:
    command: str
    config: dict

    @property
    def output(self) -> str:
        return self.config["output"]


def make_shape(cfg: dict, epsilon: float | None = None):
    kern = cfg["kernel"]
    name = kern["name"]
    eps = float(kern["epsilon"] if epsilon is None else epsilon)
    if name == "exact":
        return exact_shape(eps)
    n_nodes = int(kern["grid_nodes"])
    if name in BUILTIN_KERNELS and n_nodes == DEFAULTS["kernel"]["grid_nodes"]:
        return shape_by_name(name, eps)
    profile = profile_by_name(name) if name in BUILTIN_KERNELS else load_profile_csv(name)
    return build_shape(profile, GridSpec(n_nodes=n_nodes)).with_epsilon(eps)


def make_system(cfg: dict):
    init = cfg["initial_data"]
    kind = init["kind"]
    if kind == "points":
        return point_vortices(init["positions"], init["circulations"])
    if kind == "patch":
        R, w0, h = float(init["radius"]), float(init["omega"]), float(init["spacing"])
        if init["profile"] == "rankine":
            def omega(x, y):
                return np.where(x * x + y * y <= R * R, w0, 0.0)
            box = R
        else:
            def omega(x, y):
                return w0 * np.exp(-(x * x + y * y) / (R * R))
            box = 6.0 * R
        # centre a cell on the origin so the particle set is symmetric
        half = (math.ceil(box / h - 0.5) + 0.5) * h
        return discretize_patch(omega, (-half, half, -half, half), h, label=f"{init['profile']} patch")
    if kind == "sheet":
        n = int(init["n"])
        if init["curve"] == "segment":
            L = float(init["length"])
            def curve(s):
                return (L * (s - 0.5), 0.0 * s)
            half_len = 0.5 * L
            def position(s):
                return L * (s - 0.5)
        else:
            R = float(init["radius"])
            def curve(s):
                return (R * np.cos(2 * np.pi * s), R * np.sin(2 * np.pi * s))
            half_len = R
            def position(s):
                return R * np.cos(2 * np.pi * s)
        if init["strength"] == "uniform":
            def strength(s):
                return np.ones_like(s)
        else:
            def strength(s):
                x = position(s) / half_len
                return x / np.sqrt(np.maximum(1.0 - x * x, 1e-300))
        return discretize_sheet(curve, strength, n, label=f"{init['curve']} sheet")
    return read_system_csv(init["path"])


# ---------------------------------------------------------------- commands

def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _closed_form_error(shape) -> float | None:
    ref = {"blob": blob_shape, "alpha": alpha_shape}.get(shape.name)
    if ref is None:
        return None
    r = np.linspace(0.0, 100.0, 20001)
    return float(np.max(np.abs(shape.shape(r) - ref(r))))


def cmd_kernel_verify(cfg, out):
    shape = make_shape(cfg)
    exp = cfg["experiment"]
    spec = LemmaSampleSpec(n_points=int(exp["n_points"]), n_pairs=int(exp["n_pairs"]), seed=int(cfg["seed"]))
    report = verify_kernel_lemmas(shape, spec).to_dict()
    report["decay_within_1e-5"] = report["decay_error"] <= 1e-5
    report["shape_closed_form_error"] = _closed_form_error(shape)
    _write_json(os.path.join(out, "kernel_report.json"), report)
    return report


def cmd_l1_distance(cfg, out):
    rows = [l1_kernel_distance(make_shape(cfg, e)).to_dict() for e in cfg["experiment"]["eps_list"]]
    ratios = [a["value"] / b["value"] if b["value"] else None for a, b in zip(rows, rows[1:])]
    report = {"kernel": cfg["kernel"]["name"], "rows": rows, "ratios": ratios}
    _write_json(os.path.join(out, "l1_distance.json"), report)
    return report


def cmd_simulate(cfg, out):
    system = make_system(cfg)
    shape = make_shape(cfg)
    t = cfg["time"]
    write_system_csv(system, os.path.join(out, "particles.csv"))
    count = int(cfg["experiment"]["tracers"]["count"])
    if cfg["experiment"]["with_tracers"] and count:
        traj = passive_tracers(system, tracer_ring(cfg["experiment"]["tracers"]["radius"], count),
                               shape, t["t_end"], t["dt"], int(t["sample_every"]))
    else:
        traj = evolve(system, shape, t["t_end"], t["dt"], int(t["sample_every"]))
    with open(os.path.join(out, "trajectory.csv"), "w", newline="") as fh:
        fh.write(traj.to_csv())
    with open(os.path.join(out, "diagnostics.jsonl"), "w") as fh:
        fh.write(traj.diagnostics_jsonl())
    first, last = traj.diagnostics[0], traj.diagnostics[-1]
    summary = {
        "n_particles": len(system), "n_samples": len(traj.times), "t_end": float(traj.times[-1]),
        "return_error": float(np.max(np.hypot(*(traj.final - traj.states[0]).T))) if len(system) else 0.0,
        "circulation_drift": last.circulation - first.circulation,
        "impulse_drift": math.hypot(last.impulse_x - first.impulse_x, last.impulse_y - first.impulse_y),
        "angular_impulse_drift": last.angular_impulse - first.angular_impulse,
        "hamiltonian_drift": last.hamiltonian - first.hamiltonian,
    }
    _write_json(os.path.join(out, "summary.json"), summary)
    return summary


def _refined_system(cfg):
    """The configured initial data at half the particle spacing."""
    init = cfg["initial_data"]
    finer = copy.deepcopy(cfg)
    if init["kind"] == "patch":
        finer["initial_data"]["spacing"] = 0.5 * float(init["spacing"])
    elif init["kind"] == "sheet":
        finer["initial_data"]["n"] = 2 * int(init["n"])
    else:
        raise ConfigError("experiment.check_spacing", "needs patch or sheet initial data")
    return make_system(finer)


CONVERGENCE_COLUMNS = ("epsilon", "error", "error_half_dt", "dt_sensitivity",
                       "error_half_spacing", "spacing_sensitivity")


def cmd_converge(cfg, out):
    system = make_system(cfg)
    exp, t = cfg["experiment"], cfg["time"]
    count = int(exp["tracers"]["count"])
    if count < 1:
        raise ConfigError("experiment.tracers.count", "convergence needs at least one tracer")
    base = make_shape(cfg, 1.0)
    if base.exact:
        raise ConfigError("kernel.name", "convergence needs a regularised kernel family")
    refined = _refined_system(cfg) if exp["check_spacing"] else None
    report = convergence_experiment(
        system, base, exp["eps_list"], t["t_end"], t["dt"], tracer_ring(exp["tracers"]["radius"], count),
        reference=exp["reference"], check_dt=exp["check_dt"], sample_every=int(t["sample_every"]),
        refined=refined,
    ).to_dict()
    _write_json(os.path.join(out, "convergence.json"), report)
    with open(os.path.join(out, "convergence.csv"), "w") as fh:
        fh.write(",".join(CONVERGENCE_COLUMNS) + "\n")
        for r in report["rows"]:
            fh.write(",".join("" if r[k] is None else fmt(r[k]) for k in CONVERGENCE_COLUMNS) + "\n")
    return report


def cmd_picard(cfg, out):
    system = make_system(cfg)
    shape = make_shape(cfg)
    exp, t = cfg["experiment"], cfg["time"]
    store = picard_iterate(system, shape, t["t_end"], t["dt"], int(exp["n_max"]), float(exp["tol"]),
                           keep_all=False)
    report = cauchy_report(store)
    traj = store.trajectory(system)
    if exp["compare_direct"] and store.converged:
        direct = evolve(system, shape, t["t_end"], t["dt"], with_diagnostics=False)
        if direct.states.shape == traj.states.shape:
            report["direct_sup_error"] = float(np.max(np.hypot(*(direct.states - traj.states).reshape(-1, 2).T)))
    _write_json(os.path.join(out, "picard_report.json"), report)
    with open(os.path.join(out, "picard_trajectory.csv"), "w", newline="") as fh:
        fh.write(traj.to_csv())
    return report


HANDLERS = {
    "kernel-verify": cmd_kernel_verify,
    "simulate": cmd_simulate,
    "l1-distance": cmd_l1_distance,
    "converge": cmd_converge,
    "picard": cmd_picard,
}


# ---------------------------------------------------------------- entry point

def _split_overrides(argv):
    """Pull ``--a.b=value`` / ``--a.b value`` pairs out of ``argv``."""
    rest, overrides = [], {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        key = tok[2:].split("=", 1)[0] if tok.startswith("--") else ""
        if "." in key:
            if "=" in tok:
                raw = tok.split("=", 1)[1]
            else:
                if i + 1 >= len(argv):
                    raise ConfigError(key, "missing value")
                i += 1
                raw = argv[i]
            try:
                overrides[key] = parse_value(raw)
            except yaml.YAMLError:
                raise ConfigError(key, f"cannot parse value {raw!r}") from None
        else:
            rest.append(tok)
        i += 1
    return rest, overrides


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="epflow", description="Regularised 2D vortex dynamics experiments.")
    p.add_argument("--version", action="version", version=f"epflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML or JSON configuration (a manifest.json also works)")
        s.add_argument("--output", help="output directory")
        s.add_argument("--seed", type=int, help="seed for randomised sampling")
        s.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    return p


def _error_record(kind: str, message: str, field: str | None = None) -> dict:
    return {"error": kind, "field": field, "message": message}


def _emit_error(record, out_dir) -> None:
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    if out_dir:
        try:
            os.makedirs(out_dir, exist_ok=True)
            _write_json(os.path.join(out_dir, "error.json"), record)
        except OSError:
            pass


def run(command: str, cfg: dict) -> dict:
    out = cfg["output"]
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "manifest.json"),
                {"epflow_version": __version__, "command": command, "config": cfg})
    return HANDLERS[command](cfg, out)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out_dir = None
    try:
        argv, overrides = _split_overrides(argv)
        args = build_parser().parse_args(argv)
        file_cfg = load_config_file(args.config) if args.config else {}
        if args.output is not None:
            overrides["output"] = args.output
        if args.seed is not None:
            overrides["seed"] = args.seed
        out_dir = overrides.get("output", file_cfg.get("output", DEFAULTS["output"]))
        if not isinstance(out_dir, str):
            out_dir = None
        if args.threads < 1:
            raise ConfigError("threads", "must be >= 1")
        cfg = resolve_config(file_cfg, overrides)
        out_dir = cfg["output"]
        backend.set_threads(args.threads)
        run(args.command, cfg)
    except ConfigError as exc:
        _emit_error(_error_record("ConfigError", exc.message, exc.field), out_dir)
        return 2
    except Exception as exc:  # downstream numerical failures
        _emit_error(_error_record(type(exc).__name__, str(exc)), out_dir)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Regularised Biot-Savart velocities, RK4 flow maps and the epsilon -> 0 experiment."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .kernels.shape import ShapeTable, exact_shape
from .measures import DiagnosticsRecord, VortexSystem, diagnostics, fmt
from .numerics import rk4_step


def induced_velocity(sources: VortexSystem, targets, shape: ShapeTable, *, skip_self: bool = False) -> np.ndarray:
    """Velocity induced at ``targets`` by the vortices of ``sources``.

    With ``skip_self`` the pair ``(i, i)`` is left out, which is how a system
    evaluates its own velocity field on itself.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    return backend.velocity(sources.positions, sources.circulations, targets, shape, skip_self=skip_self)


def step_count(t_end: float, dt: float) -> tuple[int, float]:
    """Number of steps and the adjusted step that lands exactly on ``t_end``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n = max(1, math.ceil(t_end / dt - 1e-9))
    return n, t_end / n


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    system: VortexSystem
    diagnostics: list = field(default_factory=list)
    n_sources: int | None = None

    def __post_init__(self):
        if self.n_sources is None:
            self.n_sources = len(self.system)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,particle_id,x,y\n")
        for t, state in zip(self.times, self.states):
            ts = fmt(t)
            for i, (x, y) in enumerate(state):
                buf.write(f"{ts},{i},{fmt(x)},{fmt(y)}\n")
        return buf.getvalue()

    def diagnostics_jsonl(self) -> str:
        return "".join(json_line(rec.to_dict()) + "\n" for rec in self.diagnostics)


def json_line(record: dict) -> str:
    """One JSON object with every float written at 17 significant digits."""
    parts = []
    for k, v in record.items():
        val = fmt(v) if isinstance(v, float) and math.isfinite(v) else json.dumps(v)
        parts.append(f"{json.dumps(k)}: {val}")
    return "{" + ", ".join(parts) + "}"


def sample_times(t_end: float, dt: float, sample_every: int = 1) -> np.ndarray:
    """Times at which ``evolve`` records a sample, including 0 and ``t_end``."""
    n_steps, h = step_count(t_end, dt)
    every = max(1, int(sample_every))
    ks = [k for k in range(1, n_steps + 1) if k % every == 0 or k == n_steps]
    return np.array([0.0] + [t_end if k == n_steps else k * h for k in ks])


def _self_field(gamma, shape, n_sources):
    gamma = np.ascontiguousarray(gamma, float)

    def f(t, y):
        return backend.velocity(y[:n_sources], gamma, y, shape, skip_self=True)

    return f


def _integrate(positions, gamma, shape, t_end, dt, sample_every, n_sources, record):
    n_steps, h = step_count(t_end, dt)
    sample_every = max(1, int(sample_every))
    f = _self_field(gamma[:n_sources], shape, n_sources)
    y = np.array(positions, dtype=float)
    times, states, diags = [0.0], [y.copy()], [record(y, 0.0)]
    for k in range(1, n_steps + 1):
        y = rk4_step(y, (k - 1) * h, h, f)
        if k % sample_every == 0 or k == n_steps:
            t = t_end if k == n_steps else k * h
            times.append(t)
            states.append(y.copy())
            diags.append(record(y, t))
    return np.array(times), np.array(states), diags


def evolve(system: VortexSystem, shape: ShapeTable, t_end: float, dt: float,
           sample_every: int = 1, *, with_diagnostics: bool = True) -> Trajectory:
    """RK4 integration of the self-consistent N-body flow.

    The step is shrunk so that an integer number of steps lands on ``t_end``;
    the final state is always sampled.
    """
    gam = system.circulations

    def record(y, t):
        if not with_diagnostics:
            return None
        return diagnostics(system.moved(y), shape, t)

    times, states, diags = _integrate(system.positions, gam, shape, t_end, dt, sample_every, len(system), record)
    return Trajectory(times, states, system, [d for d in diags if d is not None])


def passive_tracers(sources: VortexSystem, tracers, shape: ShapeTable, t_end: float, dt: float,
                    sample_every: int = 1) -> Trajectory:
    """Co-evolve ``sources`` and advect zero-circulation ``tracers`` with them.

    Rows ``[0, N)`` of every state are the sources, the rest the tracers.
    """
    tracers = np.asarray(tracers, dtype=float).reshape(-1, 2)
    n = len(sources)
    pos = np.vstack([sources.positions, tracers])
    gam = np.concatenate([sources.circulations, np.zeros(tracers.shape[0])])
    combined = VortexSystem(pos, gam, sources.label + "+tracers")

    def record(y, t):
        return diagnostics(sources.moved(y[:n]), shape, t)

    times, states, diags = _integrate(pos, gam, shape, t_end, dt, sample_every, n, record)
    return Trajectory(times, states, combined, diags, n_sources=n)


def tracer_ring(radius: float, count: int, center=(0.0, 0.0)) -> np.ndarray:
    theta = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)])


def axisymmetric_reference(sources: VortexSystem, tracers, times, center=(0.0, 0.0)) -> np.ndarray:
    """Tracer paths in the steady field u_theta = circulation_inside(r) / (2 pi r).

    The enclosed circulation is summed from the discrete particles, so the
    reference and the simulation carry the same total strength.
    """
    tracers = np.asarray(tracers, dtype=float).reshape(-1, 2)
    c = np.asarray(center, dtype=float)
    rel = tracers - c
    r = np.hypot(rel[:, 0], rel[:, 1])
    rs = np.hypot(*(sources.positions - c).T)
    inside = np.array([np.sum(sources.circulations[rs < ri]) for ri in r])
    omega = inside / (2.0 * np.pi * r * r)
    theta0 = np.arctan2(rel[:, 1], rel[:, 0])
    ang = theta0[None, :] + omega[None, :] * np.asarray(times)[:, None]
    return np.stack([c[0] + r * np.cos(ang), c[1] + r * np.sin(ang)], axis=-1)


@dataclass
class ConvergenceRow:
    epsilon: float
    error: float
    error_half_dt: float | None = None
    error_half_spacing: float | None = None

    def _relative(self, other):
        if other is None:
            return None
        return abs(other - self.error) / self.error if self.error > 0 else 0.0

    @property
    def dt_sensitivity(self) -> float | None:
        return self._relative(self.error_half_dt)

    @property
    def spacing_sensitivity(self) -> float | None:
        return self._relative(self.error_half_spacing)

    def to_dict(self):
        return {"epsilon": self.epsilon, "error": self.error, "error_half_dt": self.error_half_dt,
                "dt_sensitivity": self.dt_sensitivity, "error_half_spacing": self.error_half_spacing,
                "spacing_sensitivity": self.spacing_sensitivity}


@dataclass
class ConvergenceReport:
    rows: list
    order: float
    rate_floor: float
    monotone: bool
    reference: str
    t_end: float
    dt: float
    n_particles: int
    n_tracers: int

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows], "order": self.order,
                "rate_floor": self.rate_floor, "monotone": self.monotone,
                "reference": self.reference, "t_end": self.t_end, "dt": self.dt,
                "n_particles": self.n_particles, "n_tracers": self.n_tracers}


def fitted_order(eps, errors) -> float:
    """Least-squares slope of log(error) against log(epsilon)."""
    x = np.log(np.asarray(eps, float))
    y = np.log(np.asarray(errors, float))
    return float(np.polyfit(x, y, 1)[0])


def _tracer_paths(sources, tracers, shape, t_end, dt, sample_every):
    traj = passive_tracers(sources, tracers, shape, t_end, dt, sample_every)
    return traj.times, traj.states[:, len(sources):, :]


def _sup_error(a, b) -> float:
    return float(np.max(np.hypot(*(a - b).T)))


def convergence_experiment(system: VortexSystem, base_shape: ShapeTable, eps_list, t_end: float, dt: float,
                           tracers, *, reference: str = "analytic", check_dt: bool = True,
                           sample_every: int = 1, center=(0.0, 0.0),
                           refined: VortexSystem | None = None) -> ConvergenceReport:
    """Sup-norm tracer error of the regularised flow against a reference, per epsilon.

    ``reference`` is ``"analytic"`` (rigid rotation in the axisymmetric field
    of the discrete circulation, for radially symmetric data), ``"exact"``
    (the same particles under the singular kernel) or ``"richardson"``
    (extrapolation from two runs at epsilon_min/2 and epsilon_min/4).

    ``refined`` is the same vorticity discretised at half the spacing. When
    given, every row also carries the error measured on it, so the particle
    discretisation error is reported next to the epsilon error instead of
    being folded into it.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must hold at least two strictly decreasing values")
    if reference not in ("analytic", "exact", "richardson"):
        raise ValueError(f"unknown reference {reference!r}")
    tracers = np.asarray(tracers, dtype=float).reshape(-1, 2)

    def run(sources, eps, step):
        return _tracer_paths(sources, tracers, base_shape.with_epsilon(eps), t_end, step, sample_every)[1]

    def reference_paths(sources, step):
        if reference == "analytic":
            return axisymmetric_reference(sources, tracers, sample_times(t_end, step, sample_every), center)
        if reference == "exact":
            return _tracer_paths(sources, tracers, exact_shape(), t_end, step, sample_every)[1]
        e_min = eps_list[-1]
        a, b, c = (run(sources, e_min / k, step) for k in (1, 2, 4))
        d1, d2 = _sup_error(a, b), _sup_error(b, c)
        q = math.log2(d1 / d2) if d1 > 0 and d2 > 0 else 2.0
        return c + (c - b) / (2.0 ** q - 1.0)

    ref = reference_paths(system, dt)
    ref_half = reference_paths(system, dt / 2) if check_dt else None
    ref_fine = reference_paths(refined, dt) if refined is not None else None

    rows = []
    for eps in eps_list:
        row = ConvergenceRow(eps, _sup_error(run(system, eps, dt), ref))
        if check_dt:
            row.error_half_dt = _sup_error(run(system, eps, dt / 2), ref_half)
        if refined is not None:
            row.error_half_spacing = _sup_error(run(refined, eps, dt), ref_fine)
        rows.append(row)
    errors = [r.error for r in rows]
    monotone = all(b < a for a, b in zip(errors, errors[1:]))
    return ConvergenceReport(
        rows=rows, order=fitted_order(eps_list, errors), rate_floor=math.exp(-t_end),
        monotone=monotone, reference=reference, t_end=float(t_end), dt=float(dt),
        n_particles=len(system), n_tracers=tracers.shape[0],
    )


def write_trajectory(traj: Trajectory, csv_path, jsonl_path=None) -> None:
    with open(csv_path, "w", newline="") as fh:
        fh.write(traj.to_csv())
    if jsonl_path is not None:
        with open(jsonl_path, "w") as fh:
            fh.write(traj.diagnostics_jsonl())


__all__ = [
    "ConvergenceReport", "ConvergenceRow", "DiagnosticsRecord", "Trajectory", "axisymmetric_reference",
    "convergence_experiment", "evolve", "fitted_order", "induced_velocity", "passive_tracers",
    "json_line", "sample_times", "step_count", "tracer_ring", "write_trajectory",
]

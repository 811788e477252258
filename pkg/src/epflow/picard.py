"""Successive-approximation flow maps and their Cauchy gaps.

Iterate ``n`` advects every particle in the velocity field of the vortices
placed on the previous iterate's trajectories:

    d/dt eta_n(x_i, t) = sum_j G_j K_h(eta_n(x_i, t) - eta_{n-1}(x_j, t)),

starting from the frozen configuration ``eta_0(x, t) = x``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .dynamics import Trajectory, step_count
from .kernels.shape import ShapeTable
from .measures import VortexSystem

STALL_LIMIT = 3


@dataclass
class IterateStore:
    """All iterates of one time window on a shared step grid.

    ``iterates[n]`` has shape (S, N, 2); ``iterates[0]`` is the frozen initial
    configuration. ``rhos[n - 1]`` is the sup-gap between iterates n and n-1.
    """

    times: np.ndarray
    iterates: list
    rhos: list
    converged: bool
    horizon: float
    stalled: bool = False
    windows: list = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        return len(self.rhos)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    def trajectory(self, system: VortexSystem) -> Trajectory:
        """Latest iterate over the full horizon, continuation windows included."""
        times, states = [self.times], [self.final]
        for w in self.windows:
            times.append(w.times[1:])
            states.append(w.final[1:])
        return Trajectory(np.concatenate(times), np.concatenate(states), system)


def _sweep(start, prev, gamma, shape, h, skip_self):
    """One RK4 pass in the field of the stored trajectory ``prev`` (S, N, 2)."""
    n_steps = prev.shape[0] - 1
    out = np.empty_like(prev)
    out[0] = start
    y = np.array(start, dtype=float)

    def vel(src, tgt):
        return backend.velocity(src, gamma, tgt, shape, skip_self=skip_self)

    for k in range(n_steps):
        p0, p1 = prev[k], prev[k + 1]
        pm = 0.5 * (p0 + p1)
        k1 = vel(p0, y)
        k2 = vel(pm, y + 0.5 * h * k1)
        k3 = vel(pm, y + 0.5 * h * k2)
        k4 = vel(p1, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = y
    return out


def _window(start, gamma, shape, t0, length, dt, n_max, tol, keep_all):
    n_steps, h = step_count(length, dt)
    times = t0 + h * np.arange(n_steps + 1)
    times[-1] = t0 + length
    frozen = np.broadcast_to(np.asarray(start, float), (n_steps + 1,) + np.shape(start)).copy()
    # the exact kernel is singular on the diagonal; smoothed kernels keep the
    # (small, nonzero) pull of a particle's own previous position
    skip_self = bool(shape.exact)
    iterates, rhos = [frozen], []
    prev = frozen
    stall = 0
    converged = False
    for _ in range(n_max):
        cur = _sweep(start, prev, gamma, shape, h, skip_self)
        rho = float(np.max(np.hypot(*(cur - prev).reshape(-1, 2).T))) if cur.size else 0.0
        if rhos and rho >= rhos[-1]:
            stall += 1
        else:
            stall = 0
        rhos.append(rho)
        iterates.append(cur)
        if not keep_all and len(iterates) > 2:
            iterates = [iterates[0], iterates[-2], iterates[-1]]
        prev = cur
        if rho < tol:
            converged = True
            break
        if stall >= STALL_LIMIT:
            return IterateStore(times, iterates, rhos, False, float(t0 + length), stalled=True)
    return IterateStore(times, iterates, rhos, converged, float(t0 + length))


def picard_iterate(system: VortexSystem, shape: ShapeTable, t_end: float, dt: float,
                   n_max: int = 20, tol: float = 1e-6, *, keep_all: bool = True,
                   continue_windows: bool = True) -> IterateStore:
    """Iterate to a fixed point on ``[0, t_end]``.

    If the gap stops shrinking for three iterations in a row the horizon is
    halved once and the iteration restarts on ``[0, t_end / 2]``. When that
    succeeds and ``continue_windows`` is set, further windows of the same
    length are solved from the end state of the previous one until ``t_end``
    is covered. ``horizon`` on the returned store is the time up to which a
    converged iterate exists.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    step_count(t_end, dt)
    gamma = np.ascontiguousarray(system.circulations, float)
    start = system.positions
    store = _window(start, gamma, shape, 0.0, t_end, dt, n_max, tol, keep_all)
    if not store.stalled:
        return store

    half = 0.5 * t_end
    store = _window(start, gamma, shape, 0.0, half, dt, n_max, tol, keep_all)
    if not store.converged:
        store.horizon = 0.0
        return store
    if not continue_windows:
        return store
    t0 = half
    last = store
    while t0 < t_end * (1 - 1e-12):
        length = min(half, t_end - t0)
        w = _window(last.final[-1], gamma, shape, t0, length, dt, n_max, tol, keep_all)
        store.windows.append(w)
        if not w.converged:
            store.converged = False
            return store
        t0 += length
        store.horizon = t0
        last = w
    return store


def cauchy_report(store: IterateStore) -> dict:
    """Gap per iteration with successive ratios, plus horizon and status."""
    items = []
    prev = None
    for n, rho in enumerate(store.rhos, start=1):
        ratio = None
        if prev is not None:
            ratio = rho / prev if prev > 0 else 0.0
        items.append({"n": n, "rho": rho, "ratio": ratio})
        prev = rho
    report = {"iterations": items, "horizon": store.horizon, "converged": store.converged}
    if store.windows:
        report["windows"] = [{"start": float(w.times[0]), "end": float(w.times[-1]),
                              "iterations": w.n_iterations, "converged": w.converged}
                             for w in store.windows]
    return report

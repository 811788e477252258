"""Particle discretisations of vorticity data and conserved-quantity diagnostics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import backend
from .kernels.shape import ShapeTable

DROP_TOL = 1e-14


@dataclass(frozen=True)
class VortexSystem:
    """Point vortices: positions (N, 2) and circulations (N,)."""

    positions: np.ndarray
    circulations: np.ndarray
    label: str = ""

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 2)
        gam = np.array(self.circulations, dtype=float).reshape(-1)
        if pos.shape[0] != gam.shape[0]:
            raise ValueError(f"{pos.shape[0]} positions but {gam.shape[0]} circulations")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(gam))):
            raise ValueError("positions and circulations must be finite")
        pos.setflags(write=False)
        gam.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "circulations", gam)

    def __len__(self):
        return self.positions.shape[0]

    @property
    def total_circulation(self) -> float:
        return float(np.sum(self.circulations))

    def moved(self, positions) -> "VortexSystem":
        """Same circulations at new positions."""
        return VortexSystem(positions, self.circulations, self.label)


def point_vortices(positions, circulations, label: str = "points") -> VortexSystem:
    positions = np.asarray(positions, dtype=float)
    if positions.size == 0:
        positions = positions.reshape(0, 2)
    return VortexSystem(positions, circulations, label)


def discretize_patch(omega: Callable, bbox, spacing: float, label: str = "patch") -> VortexSystem:
    """Midpoint-rule particles on the cells of a uniform grid covering ``bbox``.

    ``omega`` is called on arrays ``(x, y)``; ``bbox`` is ``(x0, x1, y0, y1)``.
    Cells whose vorticity is below ``1e-14 * max|omega|`` are dropped.
    """
    x0, x1, y0, y1 = map(float, bbox)
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"empty bounding box {bbox}")
    nx = max(1, int(round((x1 - x0) / spacing)))
    ny = max(1, int(round((y1 - y0) / spacing)))
    xc = x0 + (np.arange(nx) + 0.5) * spacing
    yc = y0 + (np.arange(ny) + 0.5) * spacing
    yy, xx = np.meshgrid(yc, xc, indexing="ij")
    w = np.broadcast_to(np.asarray(omega(xx, yy), dtype=float), xx.shape)
    if not np.all(np.isfinite(w)):
        raise ValueError("vorticity is not finite on the bounding box")
    peak = np.max(np.abs(w)) if w.size else 0.0
    keep = np.abs(w) >= DROP_TOL * peak if peak > 0 else np.zeros(w.shape, bool)
    pos = np.column_stack([xx[keep], yy[keep]])
    return VortexSystem(pos, w[keep] * spacing * spacing, label)


def rankine_patch(radius: float = 1.0, spacing: float = 0.05, omega: float = 1.0) -> VortexSystem:
    """Uniform vorticity on a centred disk."""
    r = float(radius)

    def w(x, y):
        return np.where(x * x + y * y <= r * r, omega, 0.0)

    return discretize_patch(w, (-r, r, -r, r), spacing, label=f"rankine(r={r:g})")


def discretize_sheet(curve: Callable, strength: Callable, n: int,
                     interval=(0.0, 1.0), label: str = "sheet") -> VortexSystem:
    """Midpoint particles along a parametrised curve.

    The parameter interval is cut into ``n`` equal pieces. Particle ``i`` sits
    at the curve point of the piece midpoint and carries
    ``strength(s_i) * chord_length_i``.
    """
    n = int(n)
    if n < 2:
        raise ValueError("a sheet needs at least 2 particles")
    a, b = map(float, interval)
    edges = np.linspace(a, b, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    ends = np.asarray(curve(edges), dtype=float).reshape(2, -1).T
    lengths = np.hypot(*np.diff(ends, axis=0).T)
    if not np.sum(lengths) > 0:
        raise ValueError("sheet curve has zero length")
    pos = np.asarray(curve(mids), dtype=float).reshape(2, -1).T
    gam = np.asarray(strength(mids), dtype=float) * lengths
    return VortexSystem(pos, gam, label)


@dataclass(frozen=True)
class DiagnosticsRecord:
    circulation: float
    impulse_x: float
    impulse_y: float
    angular_impulse: float
    hamiltonian: float
    t: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"t": self.t, "circulation": self.circulation, "impulse_x": self.impulse_x,
                "impulse_y": self.impulse_y, "angular_impulse": self.angular_impulse,
                "hamiltonian": self.hamiltonian}


def hamiltonian(positions, circulations, shape: ShapeTable) -> float:
    """Pairwise energy 1/2 sum_{i != j} G_i G_j psi(|x_i - x_j|), fixed summation order."""
    gam = np.asarray(circulations, dtype=float)
    rows = backend.energy_rows(positions, gam, shape)
    return 0.5 * float(np.dot(gam, rows))


def diagnostics(system: VortexSystem, shape: ShapeTable, t: float = 0.0) -> DiagnosticsRecord:
    pos, gam = system.positions, system.circulations
    return DiagnosticsRecord(
        circulation=float(np.sum(gam)),
        impulse_x=float(np.dot(gam, pos[:, 0])) if len(system) else 0.0,
        impulse_y=float(np.dot(gam, pos[:, 1])) if len(system) else 0.0,
        angular_impulse=float(np.dot(gam, np.einsum("ij,ij->i", pos, pos))) if len(system) else 0.0,
        hamiltonian=hamiltonian(pos, gam, shape),
        t=float(t),
    )


def fmt(x: float) -> str:
    return "%.17g" % x


def system_to_csv(system: VortexSystem) -> str:
    buf = io.StringIO()
    buf.write("x,y,gamma\n")
    for (x, y), g in zip(system.positions, system.circulations):
        buf.write(f"{fmt(x)},{fmt(y)},{fmt(g)}\n")
    return buf.getvalue()


def write_system_csv(system: VortexSystem, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(system_to_csv(system))


def read_system_csv(path, label: str | None = None) -> VortexSystem:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"x", "y", "gamma"} <= set(rows[0]):
        raise ValueError(f"{path}: expected header x,y,gamma")
    pos = [(float(r["x"]), float(r["y"])) for r in rows]
    gam = [float(r["gamma"]) for r in rows]
    return point_vortices(pos, gam, label or str(path))

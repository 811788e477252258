"""Shape tables: the radial multiplier G(r) = int_0^r k h_r(k) dk and its stream function.

The regularised kernel at scale eps is K(x) * G(|x|/eps). Tables are built once
per profile on a dimensionless grid; eps is applied at evaluation time.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..numerics import (
    QuadratureSpec,
    RadialTable,
    gauss_legendre_segments,
    integrate_1d,
    integrate_segments,
)
from .profiles import LOGARITHMIC, NORM_TOL, KernelProfile, NormalizationError

__all__ = ["GridSpec", "ShapeTable", "build_shape", "exact_shape", "default_r_max"]

TWO_PI = 2.0 * np.pi
TAIL_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """2048 nodes by default: half linear on [0, 1], half log-spaced on [1, r_max]."""

    n_nodes: int = 2048
    r_max: Optional[float] = None

    def __post_init__(self):
        if self.n_nodes < 8:
            raise ValueError("grid needs at least 8 nodes")
        if self.r_max is not None and not self.r_max > 1.0:
            raise ValueError("r_max must exceed 1")


def default_r_max(profile: KernelProfile, tail_tol: float = TAIL_TOL, cap: float = 1e8) -> float:
    if profile.default_r_max is not None:
        return float(profile.default_r_max)
    f = lambda k: k * profile(k)  # noqa: E731
    r = 10.0
    while r <= cap:
        if abs(integrate_1d(f, r, np.inf)) < tail_tol:
            return r
        r *= 2.0
    raise NormalizationError(f"profile {profile.name!r}: tail does not fall below {tail_tol:g}")


@dataclass(frozen=True)
class ShapeTable:
    """Tabulated shape function with tail, core model and stream function.

    Arrays are read-only and may be shared between threads. ``exact`` marks the
    degenerate table G == 1 of the unregularised Biot-Savart kernel.
    """

    name: str
    epsilon: float
    exact: bool
    grid: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    tail_values: np.ndarray
    tail_slopes: np.ndarray
    stream_values: np.ndarray
    stream_slopes: np.ndarray
    tail_radius: float
    tail_at_rmax: float
    core_a: float
    core_b: float
    n_linear: int
    log_step: float
    nonnegative: bool = True
    first_radial_moment: float = float("nan")
    # from this radius on G is evaluated as 1 - tail(r)
    split_radius: float = float("inf")

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def with_epsilon(self, epsilon: float) -> "ShapeTable":
        return dataclasses.replace(self, epsilon=float(epsilon))

    # -- dimensionless evaluation -------------------------------------------------
    @property
    def r1(self) -> float:
        return float(self.grid[1]) if not self.exact else 0.0

    def _segment(self, r):
        g = self.grid
        return np.clip(np.searchsorted(g, r, side="right") - 1, 1, g.size - 2)

    @staticmethod
    def _hermite(x, y, d, i, r):
        # increment form: exact at both nodes, rounding relative to the increment
        h = x[i + 1] - x[i]
        t = (r - x[i]) / h
        s = 1.0 - t
        dy = y[i + 1] - y[i]
        return y[i] + t * t * (3.0 - 2.0 * t) * dy + h * t * s * (s * d[i] - t * d[i + 1])

    def core_over_r2(self, r):
        """G(r)/r**2 in the innermost segment, finite at r = 0 for bounded profiles."""
        r = np.asarray(r, float)
        if self.core_b == 0.0:
            return np.full_like(r, self.core_a)
        with np.errstate(divide="ignore"):
            return self.core_a - self.core_b * np.log(r)

    def shape(self, r):
        """Dimensionless shape G(r), vectorised."""
        r = np.asarray(r, float)
        if self.exact:
            return np.ones_like(r)
        out = np.empty_like(r)
        core = r < self.r1
        far = r > self.tail_radius
        mid = ~(core | far)
        if core.any():
            rc = r[core]
            out[core] = np.where(rc > 0, rc * rc * self.core_over_r2(np.where(rc > 0, rc, 1.0)), 0.0)
        if far.any():
            out[far] = 1.0 - self.tail_at_rmax * (self.tail_radius / r[far]) ** 2
        upper = mid & (r >= self.split_radius)
        mid &= ~upper
        if mid.any():
            rm = r[mid]
            out[mid] = self._hermite(self.grid, self.values, self.slopes, self._segment(rm), rm)
        if upper.any():
            ru = r[upper]
            out[upper] = 1.0 - self._hermite(self.grid, self.tail_values, self.tail_slopes, self._segment(ru), ru)
        return out

    def tail(self, r):
        """1 - G(r), evaluated from the separately accumulated tail table."""
        r = np.asarray(r, float)
        if self.exact:
            return np.zeros_like(r)
        out = np.empty_like(r)
        core = r < self.r1
        far = r > self.tail_radius
        mid = ~(core | far)
        if core.any():
            out[core] = 1.0 - self.shape(r[core])
        if far.any():
            out[far] = self.tail_at_rmax * (self.tail_radius / r[far]) ** 2
        if mid.any():
            rm = r[mid]
            out[mid] = self._hermite(self.grid, self.tail_values, self.tail_slopes,
                                     self._segment(rm), rm)
        return out

    def stream1(self, r):
        """Unit-scale stream function G^1_r(r)."""
        r = np.asarray(r, float)
        if self.exact:
            with np.errstate(divide="ignore"):
                return -np.log(r) / TWO_PI
        out = np.empty_like(r)
        core = r < self.r1
        far = r > self.tail_radius
        mid = ~(core | far)
        if core.any():
            out[core] = self.stream_values[0] - _core_integral(r[core], self.core_a, self.core_b) / TWO_PI
        if far.any():
            rf = r[far]
            out[far] = -(np.log(rf) + 0.5 * self.tail_at_rmax * (self.tail_radius / rf) ** 2) / TWO_PI
        if mid.any():
            rm = r[mid]
            out[mid] = self._hermite(self.grid, self.stream_values, self.stream_slopes,
                                     self._segment(rm), rm)
        return out

    # -- scaled evaluation ------------------------------------------------------------
    def factor(self, r):
        """G(|x|/eps)/|x|**2 as a function of |x|; zero at |x| = 0 by convention."""
        r = np.asarray(r, float)
        shp = r.shape
        r = r.reshape(-1)
        eps = self.epsilon
        pos = r > 0
        out = np.zeros_like(r)
        if self.exact:
            out[pos] = 1.0 / (r[pos] * r[pos])
            return out.reshape(shp)
        rho = r / eps
        core = pos & (rho < self.r1)
        rest = pos & ~core
        # inside the core G/r^2 is taken directly so tiny radii cannot underflow
        out[core] = self.core_over_r2(rho[core]) / (eps * eps)
        out[rest] = self.shape(rho[rest]) / (r[rest] * r[rest])
        return out.reshape(shp)

    def cython_args(self):
        """Flat parameters consumed by the compiled and fallback kernels."""
        return (self.grid, self.values, self.slopes, self.stream_values, self.stream_slopes,
                float(self.epsilon), int(self.exact), float(self.core_a), float(self.core_b),
                float(self.tail_radius), float(self.tail_at_rmax), int(self.n_linear),
                float(self.log_step))


def _core_integral(r, a, b):
    """int_0^r s (a - b log s) ds, i.e. int_0^r G(s)/s ds inside the core."""
    r = np.asarray(r, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * a * r * r - b * (0.5 * r * r * np.log(r) - 0.25 * r * r)
    return np.where(r > 0, val, 0.0)


def _grid(n_nodes, r_max):
    n_lin = n_nodes // 2
    n_log = n_nodes - n_lin
    lin = np.linspace(0.0, 1.0, n_lin)
    log_step = np.log(r_max) / n_log
    logs = np.exp(log_step * np.arange(1, n_log + 1))
    logs[-1] = r_max
    return np.concatenate([lin, logs]), n_lin, log_step


def build_shape(profile: KernelProfile, grid_spec: GridSpec = GridSpec(), *,
                epsilon: float = 1.0, spec: Optional[QuadratureSpec] = None,
                norm_tol: float = NORM_TOL) -> ShapeTable:
    """Tabulate G(r) = int_0^r k h_r(k) dk by adaptive quadrature.

    Raises
    ------
    NormalizationError
        If G(r_max) + tail(r_max) differs from 1 by more than ``norm_tol``.
    QuadratureError
        If any segment integral fails to converge.
    """
    spec = spec or profile.quad_spec
    r_max = grid_spec.r_max or default_r_max(profile)
    grid, n_lin, log_step = _grid(grid_spec.n_nodes, r_max)
    f = lambda k: k * profile(k)  # noqa: E731

    seg = integrate_segments(f, grid, spec)
    tail_max = integrate_1d(f, r_max, np.inf, QuadratureSpec(spec.abs_tol, spec.rel_tol, spec.max_depth))
    total = seg.sum() + tail_max
    if not abs(total - 1.0) <= norm_tol:
        raise NormalizationError(
            f"profile {profile.name!r}: G(r_max) + tail = {total:.12g}, expected 1"
        )

    values = np.concatenate([[0.0], np.cumsum(seg)])
    tail_values = tail_max + np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    # the forward sum carries the quadrature residue into G -> 1; past the
    # midpoint take G from the tail sum so it approaches 1 from below
    upper = np.nonzero(values >= 0.5)[0]
    split = float(grid[upper[0]]) if upper.size else np.inf
    if upper.size:
        values[upper[0]:] = 1.0 - tail_values[upper[0]:]
    dg = np.empty_like(grid)
    dg[0] = 0.0
    dg[1:] = f(grid[1:])

    # innermost segment: G(r) ~ r^2 (a - b log r)
    r1 = grid[1]
    g1 = values[1] / (r1 * r1)
    if profile.singularity == LOGARITHMIC:
        half = integrate_1d(f, 0.0, 0.5 * r1, QuadratureSpec(singularity_hint="log_at_zero"))
        g2 = half / (0.25 * r1 * r1)
        core_b = (g2 - g1) / np.log(2.0)
        core_a = g1 + core_b * np.log(r1)
    else:
        core_b, core_a = 0.0, g1

    gtab = RadialTable(grid, values, dg, monotone=profile.nonnegative)
    ttab = RadialTable(grid, tail_values, -dg, monotone=profile.nonnegative)

    # stream function: anchored at infinity through the tail, then integrated inward
    i_one = n_lin - 1
    outer = grid[i_one:]
    w_seg = gauss_legendre_segments(lambda s: ttab(s) / s, outer)
    w = 0.5 * tail_max + np.concatenate([np.cumsum(w_seg[::-1])[::-1], [0.0]])
    stream = np.empty_like(grid)
    stream[i_one:] = -(np.log(outer) + w) / TWO_PI
    inner = grid[: i_one + 1]
    g_seg = gauss_legendre_segments(lambda s: gtab(s) / s, inner[1:])
    g_seg = np.concatenate([[_core_integral(r1, core_a, core_b)], g_seg])
    acc = np.concatenate([np.cumsum(g_seg[::-1])[::-1], [0.0]])
    stream[: i_one + 1] = stream[i_one] + acc / TWO_PI
    ds = np.zeros_like(grid)
    ds[1:] = -values[1:] / (TWO_PI * grid[1:])

    for arr in (grid, ds):
        arr.setflags(write=False)
    return ShapeTable(
        name=profile.name, epsilon=float(epsilon), exact=False, grid=grid,
        values=gtab.values, slopes=gtab.slopes,
        tail_values=ttab.values, tail_slopes=ttab.slopes,
        stream_values=stream, stream_slopes=ds,
        tail_radius=float(r_max), tail_at_rmax=float(tail_max),
        core_a=float(core_a), core_b=float(core_b), n_linear=n_lin, log_step=float(log_step),
        nonnegative=profile.nonnegative, first_radial_moment=float(profile.first_radial_moment),
        split_radius=split,
    )


def exact_shape(epsilon: float = 1.0) -> ShapeTable:
    """Degenerate table G == 1: the singular Biot-Savart kernel.

    Self-interaction must be excluded by the caller; the kernel is returned as
    zero at the origin by convention.
    """
    empty = np.zeros(2)
    empty.setflags(write=False)
    return ShapeTable(
        name="exact", epsilon=float(epsilon), exact=True, grid=np.array([0.0, 1.0]),
        values=empty, slopes=empty, tail_values=empty, tail_slopes=empty,
        stream_values=empty, stream_slopes=empty, tail_radius=np.inf, tail_at_rmax=0.0,
        core_a=0.0, core_b=0.0, n_linear=2, log_step=1.0, nonnegative=True,
        first_radial_moment=0.0,
    )

"""Shared numerical plumbing: adaptive quadrature, monotone radial tables, RK4."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "QuadratureError",
    "QuadratureSpec",
    "RadialTable",
    "integrate_1d",
    "integrate_segments",
    "gauss_legendre_segments",
    "rk4_step",
]


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_depth: int = 48
    singularity_hint: str = "none"  # "none" | "log_at_zero"

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.singularity_hint not in ("none", "log_at_zero"):
            raise ValueError(f"unknown singularity_hint {self.singularity_hint!r}")


DEFAULT_SPEC = QuadratureSpec()

# Gauss-Kronrod 7/15 pair (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])          # 15 nodes, ascending
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5]] = _WG[:3]
_WG15[[13, 11, 9]] = _WG[:3]
_WG15[7] = _WG[3]

_MAX_INTERVALS = 200_000


def _gk15(f, a, b):
    """Kronrod estimate and |K15 - G7| for arrays of intervals."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _NODES[None, :]
    fx = np.asarray(f(x.ravel()), dtype=float).reshape(x.shape)
    k = half * (fx @ _WK)
    g = half * (fx @ _WG15)
    return k, np.abs(k - g)


def _graded_edges(a: float, b: float, levels: int = 40) -> np.ndarray:
    # geometric refinement toward a for log-type endpoint singularities
    frac = 0.5 ** np.arange(levels, 0, -1)
    return np.concatenate([[a], a + (b - a) * frac, [b]])


def _adaptive(f, lo, hi, owner, n_problems, spec):
    """Vectorised adaptive GK15 over many independent integrals.

    ``lo``/``hi``/``owner`` describe the initial partition: interval ``i``
    belongs to integral ``owner[i]``. Returns per-problem (value, error).
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    owner = np.asarray(owner, np.intp)
    depth = np.zeros(lo.size, np.intp)
    span = np.zeros(n_problems)
    np.add.at(span, owner, hi - lo)

    done_val = np.zeros(n_problems)
    done_err = np.zeros(n_problems)
    while lo.size:
        val, err = _gk15(f, lo, hi)
        if not np.all(np.isfinite(val)):
            raise QuadratureError("integrand produced non-finite values")
        tot_val = done_val.copy()
        np.add.at(tot_val, owner, val)
        tot_err = done_err.copy()
        np.add.at(tot_err, owner, err)
        tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tot_val))
        # an interval is accepted when it fits its length share of the budget,
        # or the whole integral already meets tolerance
        share = tol[owner] * (hi - lo) / span[owner]
        finished = tot_err <= tol
        accept = (err <= share) | finished[owner]
        stuck = ~accept & (depth >= spec.max_depth)
        if np.any(stuck):
            accept |= stuck
        np.add.at(done_val, owner[accept], val[accept])
        np.add.at(done_err, owner[accept], err[accept])
        keep = ~accept
        lo, hi, owner, depth = lo[keep], hi[keep], owner[keep], depth[keep]
        if lo.size * 2 > _MAX_INTERVALS:
            raise QuadratureError("interval budget exhausted")
        mid = 0.5 * (lo + hi)
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        owner = np.concatenate([owner, owner])
        depth = np.concatenate([depth, depth]) + 1

    tol = np.maximum(spec.abs_tol, spec.rel_tol * np.abs(done_val))
    bad = done_err > tol
    if np.any(bad):
        i = int(np.argmax(done_err / tol))
        raise QuadratureError(
            f"no convergence after max_depth={spec.max_depth}: "
            f"error estimate {done_err[i]:.3e} > tolerance {tol[i]:.3e}"
        )
    return done_val, done_err


def _infinite_transform(f, a):
    def g(s):
        one_minus = 1.0 - s
        k = a + s / one_minus
        return f(k) / (one_minus * one_minus)
    return g


def integrate_1d(f: Callable, a: float, b: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Integrate a vectorised scalar function ``f`` over ``[a, b]``.

    ``b`` may be ``np.inf``; the tail is mapped to the unit interval through
    ``k = a + s/(1-s)``. With ``singularity_hint="log_at_zero"`` the partition
    is graded geometrically toward ``a``.

    Raises
    ------
    QuadratureError
        If the error estimate cannot be pushed below the tolerance.
    """
    if b == a:
        return 0.0
    if b < a:
        return -integrate_1d(f, b, a, spec)
    if np.isinf(a):
        raise ValueError("lower limit must be finite")
    if np.isinf(b):
        g, lo_, hi_ = _infinite_transform(f, a), 0.0, 1.0
    else:
        g, lo_, hi_ = f, float(a), float(b)
    if spec.singularity_hint == "log_at_zero":
        edges = _graded_edges(lo_, hi_)
    else:
        edges = np.array([lo_, hi_])
    owner = np.zeros(edges.size - 1, np.intp)
    val, _ = _adaptive(g, edges[:-1], edges[1:], owner, 1, spec)
    return float(val[0])


def integrate_segments(f: Callable, edges, spec: QuadratureSpec = DEFAULT_SPEC) -> np.ndarray:
    """Integrals of ``f`` over every ``[edges[i], edges[i+1]]``, in one batch.

    The first segment is graded toward ``edges[0]`` when ``spec`` carries the
    ``log_at_zero`` hint.
    """
    edges = np.asarray(edges, float)
    n = edges.size - 1
    lo, hi = edges[:-1].copy(), edges[1:].copy()
    owner = np.arange(n)
    if spec.singularity_hint == "log_at_zero" and n:
        g = _graded_edges(edges[0], edges[1])
        lo = np.concatenate([g[:-1], lo[1:]])
        hi = np.concatenate([g[1:], hi[1:]])
        owner = np.concatenate([np.zeros(g.size - 1, np.intp), owner[1:]])
    val, _ = _adaptive(f, lo, hi, owner, n, spec)
    return val


def gauss_legendre_segments(f: Callable, edges, order: int = 10) -> np.ndarray:
    """Fixed-order Gauss-Legendre integral of ``f`` on each segment."""
    edges = np.asarray(edges, float)
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = np.asarray(f(pts.ravel()), float).reshape(pts.shape)
    return half * (vals @ w)


def _limit_slopes(y, d, h):
    """Fritsch-Carlson limiting so each cubic piece stays monotone."""
    d = d.copy()
    delta = np.diff(y) / h
    for i, dl in enumerate(delta):
        if dl == 0.0:
            d[i] = d[i + 1] = 0.0
            continue
        a, b = d[i] / dl, d[i + 1] / dl
        if a < 0.0:
            d[i], a = 0.0, 0.0
        if b < 0.0:
            d[i + 1], b = 0.0, 0.0
        s = a * a + b * b
        if s > 9.0:
            tau = 3.0 / np.sqrt(s)
            d[i] = tau * a * dl
            d[i + 1] = tau * b * dl
    return d


class RadialTable:
    """Piecewise-cubic Hermite table on strictly increasing radii.

    Node values are reproduced exactly. When ``monotone`` is set the slopes are
    limited (Fritsch-Carlson) so the interpolant is monotone wherever the data
    are. Slopes default to three-point finite-difference estimates.
    """

    def __init__(self, nodes, values, slopes=None, monotone=True):
        nodes = np.asarray(nodes, float)
        values = np.asarray(values, float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 2:
            raise ValueError("nodes and values must be 1-D arrays of equal length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if slopes is None:
            slopes = np.gradient(values, nodes)
        slopes = np.asarray(slopes, float)
        h = np.diff(nodes)
        if monotone:
            slopes = _limit_slopes(values, slopes, h)
        self.nodes = nodes
        self.values = values
        self.slopes = slopes
        for arr in (self.nodes, self.values, self.slopes):
            arr.setflags(write=False)

    def __call__(self, r):
        r = np.asarray(r, float)
        x, y, d = self.nodes, self.values, self.slopes
        i = np.clip(np.searchsorted(x, r, side="right") - 1, 0, x.size - 2)
        h = x[i + 1] - x[i]
        t = (r - x[i]) / h
        s = 1.0 - t
        return y[i] + t * t * (3.0 - 2.0 * t) * (y[i + 1] - y[i]) + h * t * s * (s * d[i] - t * d[i + 1])


def rk4_step(state, t: float, dt: float, f: Callable):
    """One classical Runge-Kutta step of ``dy/dt = f(t, y)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k1 = f(t, state)
    k2 = f(t + 0.5 * dt, state + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, state + 0.5 * dt * k2)
    k4 = f(t + dt, state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

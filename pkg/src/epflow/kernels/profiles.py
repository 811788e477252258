"""Radial smoothing profiles h_r(k), normalised so that int_0^inf k h_r(k) dk = 1."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..numerics import QuadratureSpec, RadialTable, integrate_1d
from .bessel import bessel_k0

__all__ = [
    "KernelProfile",
    "NormalizationError",
    "blob_profile",
    "alpha_profile",
    "make_profile",
    "load_profile_csv",
    "profile_by_name",
]

BOUNDED = "bounded"
LOGARITHMIC = "logarithmic"

NORM_TOL = 1e-8


class NormalizationError(ValueError):
    """Profile does not carry unit mass under int k h_r(k) dk."""


@dataclass(frozen=True)
class KernelProfile:
    """A radial smoothing profile and the metadata the shape builder needs.

    ``profile`` must accept numpy arrays of radii ``k > 0``. The planar
    smoothing function at scale ``eps`` is ``h_r(|x|/eps) / (2 pi eps**2)``.
    """

    name: str
    profile: Callable[[np.ndarray], np.ndarray]
    singularity: str
    first_radial_moment: float
    mass: float = 1.0
    nonnegative: bool = True
    default_r_max: Optional[float] = None
    source: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.singularity not in (BOUNDED, LOGARITHMIC):
            raise ValueError(f"unknown singularity class {self.singularity!r}")

    def __call__(self, k):
        return self.profile(np.asarray(k, dtype=float))

    @property
    def quad_spec(self) -> QuadratureSpec:
        hint = "log_at_zero" if self.singularity == LOGARITHMIC else "none"
        return QuadratureSpec(singularity_hint=hint)


def _moments(h, singularity):
    spec = QuadratureSpec(singularity_hint="log_at_zero" if singularity == LOGARITHMIC else "none")
    mass = integrate_1d(lambda k: k * h(k), 0.0, np.inf, spec)
    first = integrate_1d(lambda k: k * k * np.abs(h(k)), 0.0, np.inf, spec)
    return mass, first


def make_profile(name, h, singularity=BOUNDED, *, default_r_max=None,
                 nonnegative=True, norm_tol=NORM_TOL, source=None) -> KernelProfile:
    """Wrap a vectorised radial function, computing and checking its moments."""
    mass, first = _moments(h, singularity)
    if not abs(mass - 1.0) <= norm_tol:
        raise NormalizationError(
            f"profile {name!r}: int k h_r(k) dk = {mass:.12g}, expected 1 (tol {norm_tol:g})"
        )
    if not np.isfinite(first):
        raise NormalizationError(f"profile {name!r}: first radial moment is not finite")
    return KernelProfile(name, h, singularity, first, mass=mass, nonnegative=nonnegative,
                         default_r_max=default_r_max, source=dict(source or {}))


def _blob(k):
    k = np.asarray(k, float)
    return 2.0 / (k * k + 1.0) ** 2


def _alpha(k):
    k = np.asarray(k, float)
    pos = k > 0
    safe = np.where(pos, k, 1.0)
    return np.where(pos, bessel_k0(safe), np.inf)


def blob_profile() -> KernelProfile:
    """psi(k) = 2/(k^2+1)^2, giving the algebraic blob shape r^2/(r^2+1)."""
    # closed-form moments: mass 1, first moment pi/2
    return KernelProfile("blob", _blob, BOUNDED, np.pi / 2, default_r_max=1e5,
                         source={"name": "blob"})


def alpha_profile() -> KernelProfile:
    """h_r = K0, the Green's function of (1 - Laplacian) up to 2 pi."""
    # int k K0 = 1 and int k^2 K0 = 2 Gamma(3/2)^2 = pi/2
    return KernelProfile("alpha", _alpha, LOGARITHMIC, np.pi / 2, default_r_max=50.0,
                         source={"name": "alpha"})


def _classify(k, h):
    """Heuristic singularity class from the innermost samples."""
    pos = k > 0
    if k[0] == 0.0 and np.isfinite(h[0]):
        return BOUNDED
    kk, hh = k[pos][:4], h[pos][:4]
    if kk.size < 3:
        return BOUNDED
    # growth against -log k that does not level off indicates a log singularity
    slope = np.diff(hh) / np.diff(-np.log(kk))
    if np.all(slope > 0) and slope[0] > 0.5 * slope[-1] and slope[0] > 1e-3 * abs(hh[0]):
        return LOGARITHMIC
    return BOUNDED


def load_profile_csv(path, *, norm_tol: float = 1e-6) -> KernelProfile:
    """Load a tabulated profile from a two-column CSV ``k, h_r(k)``.

    A header row is optional. Between samples the profile is interpolated by a
    monotone cubic; beyond the last sample it is zero. Below the first positive
    sample a constant (bounded) or ``a - b log k`` (logarithmic) continuation
    is used. Normalisation is checked at load time.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ValueError(f"{path}: malformed row {row!r}") from None
    if len(rows) < 3:
        raise ValueError(f"{path}: need at least three samples")
    data = np.array(rows)
    k, h = data[:, 0], data[:, 1]
    if np.any(np.diff(k) <= 0) or k[0] < 0:
        raise ValueError(f"{path}: radii must be nonnegative and strictly increasing")
    sing = _classify(k, h)
    table = RadialTable(k, h, monotone=True)
    k_lo, k_hi = k[0], k[-1]
    if sing == LOGARITHMIC:
        b = (h[1] - h[0]) / (np.log(k[0]) - np.log(k[1]))
        a = h[0] + b * np.log(k[0])

        def inner(x):
            return a - b * np.log(x)
    else:
        h0 = h[0]

        def inner(x):
            return np.full_like(x, h0)

    def h_fn(x):
        x = np.asarray(x, float)
        out = np.zeros_like(x)
        mid = (x >= k_lo) & (x <= k_hi)
        out[mid] = table(x[mid])
        low = x < k_lo
        if low.any():
            out[low] = inner(np.maximum(x[low], 1e-300))
        return out

    return make_profile(path.stem, h_fn, sing, default_r_max=float(k_hi),
                        nonnegative=bool(np.all(h >= 0)), norm_tol=norm_tol,
                        source={"csv": str(path)})


def profile_by_name(name: str) -> KernelProfile:
    if name == "blob":
        return blob_profile()
    if name == "alpha":
        return alpha_profile()
    raise KeyError(f"unknown built-in profile {name!r} (expected 'blob' or 'alpha')")

"""Kernel evaluation, closed-form shapes and the kernel-estimate checks."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..numerics import gauss_legendre_segments
from .bessel import one_minus_x_k1
from .shape import ShapeTable

__all__ = [
    "DomainError",
    "singular_kernel",
    "blob_shape",
    "alpha_shape",
    "kernel_eval",
    "stream_eval",
    "quasi_lipschitz_modulus",
    "LemmaSampleSpec",
    "LemmaReport",
    "verify_kernel_lemmas",
    "L1Distance",
    "l1_kernel_distance",
]

TWO_PI = 2.0 * np.pi


class DomainError(ValueError):
    pass


def _perp(x):
    # x_perp = (x2, -x1)
    return np.stack([x[..., 1], -x[..., 0]], axis=-1)


def singular_kernel(x):
    """K(x) = -(1/2pi) x_perp / |x|^2 for x != 0."""
    x = np.asarray(x, float)
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 == 0.0):
        raise DomainError("singular kernel evaluated at x = 0")
    return -_perp(x) / (TWO_PI * r2[..., None])


def blob_shape(r):
    r = np.asarray(r, float)
    r2 = r * r
    return r2 / (r2 + 1.0)


def alpha_shape(r):
    """B_K(r) = 1 - r K1(r)."""
    return one_minus_x_k1(r)


def kernel_eval(shape: ShapeTable, x):
    """Regularised kernel K(x) G(|x|/eps); exactly (0, 0) at the origin."""
    x = np.asarray(x, float)
    r = np.sqrt(np.sum(x * x, axis=-1))
    f = shape.factor(r)
    return -_perp(x) * (f / TWO_PI)[..., None]


def stream_eval(shape: ShapeTable, r):
    """Radial stream function G^eps_r(r) = G^1_r(r/eps) - log(eps)/(2 pi)."""
    r = np.asarray(r, float)
    if np.any(r < 0):
        raise DomainError("radius must be nonnegative")
    eps = shape.epsilon
    return shape.stream1(r / eps) - np.log(eps) / TWO_PI


def quasi_lipschitz_modulus(r):
    """phi(r) = r (1 - log r) below 1, and 1 from there on."""
    r = np.asarray(r, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        small = r * (1.0 - np.log(r))
    return np.where(r < 1.0, np.where(r > 0, small, 0.0), 1.0)


@dataclass(frozen=True)
class LemmaSampleSpec:
    """Sampling of the kernel property checks; lengths are in units of epsilon."""

    n_points: int = 4000
    n_pairs: int = 10_000
    radius: float = 5.0
    decay_radius: float = 1e3
    min_separation: float = 1e-6
    max_separation: float = 2.0
    seed: int = 0


@dataclass
class LemmaReport:
    name: str
    epsilon: float
    max_kernel: float
    max_kernel_radius: float
    kernel_at_origin: list
    decay_radius: float
    decay_product: float
    decay_limit: float
    decay_error: float
    quasi_lipschitz: float
    quasi_lipschitz_doubled: float
    quasi_lipschitz_change: float
    quasi_lipschitz_by_decade: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def verify_kernel_lemmas(shape: ShapeTable, sample_spec: LemmaSampleSpec = LemmaSampleSpec()) -> LemmaReport:
    """Empirical boundedness, far-field decay and quasi-Lipschitz constant of K_h.

    The quasi-Lipschitz constant is the largest ratio
    |K(x) - K(x')| / phi(|x - x'|) over random pairs; it is evaluated on
    ``n_pairs`` pairs and again on twice as many to gauge its stability.
    """
    eps = shape.epsilon
    rng = np.random.default_rng(sample_spec.seed)

    # boundedness: radial scan plus random points
    r_scan = eps * np.concatenate([np.linspace(0.0, sample_spec.radius, sample_spec.n_points),
                                   np.logspace(-8, np.log10(sample_spec.radius), 400)])
    pts = np.stack([r_scan, np.zeros_like(r_scan)], axis=-1)
    rnd = _disk(rng, sample_spec.n_points, sample_spec.radius * eps)
    all_pts = np.concatenate([pts, rnd])
    if shape.exact:
        all_pts = all_pts[np.sum(all_pts * all_pts, axis=-1) > 0]
    mags = np.linalg.norm(kernel_eval(shape, all_pts), axis=-1)
    imax = int(np.argmax(mags))

    # decay: |x| |K(x)| at a large radius, over several directions
    theta = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    big = sample_spec.decay_radius * eps
    far = big * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    prod = big * np.linalg.norm(kernel_eval(shape, far), axis=-1)
    decay_product = float(prod.max())
    limit = 1.0 / TWO_PI

    # quasi-Lipschitz constant over random pairs, n and 2n
    n = sample_spec.n_pairs
    ratios, seps = _pair_ratios(shape, rng, 2 * n, sample_spec)
    c1 = float(ratios[:n].max())
    c2 = float(ratios.max())
    decades = {}
    lo = np.floor(np.log10(seps.min() / eps))
    for d in range(int(lo), int(np.ceil(np.log10(sample_spec.max_separation)))):
        m = (seps / eps >= 10.0 ** d) & (seps / eps < 10.0 ** (d + 1))
        if m.any():
            decades[f"1e{d}"] = float(ratios[m].max())

    return LemmaReport(
        name=shape.name, epsilon=eps,
        max_kernel=float(mags[imax]),
        max_kernel_radius=float(np.linalg.norm(all_pts[imax])),
        kernel_at_origin=kernel_eval(shape, np.zeros(2)).tolist(),
        decay_radius=float(big), decay_product=decay_product, decay_limit=limit,
        decay_error=abs(decay_product - limit),
        quasi_lipschitz=c1, quasi_lipschitz_doubled=c2,
        quasi_lipschitz_change=abs(c2 - c1) / c1 if c1 > 0 else 0.0,
        quasi_lipschitz_by_decade=decades,
    )


def _disk(rng, n, radius):
    r = radius * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)


def _pair_ratios(shape, rng, n, ss):
    eps = shape.epsilon
    x = _disk(rng, n, ss.radius * eps)
    lo, hi = np.log(ss.min_separation), np.log(ss.max_separation)
    d = eps * np.exp(lo + (hi - lo) * rng.random(n))
    t = 2 * np.pi * rng.random(n)
    xp = x + d[:, None] * np.stack([np.cos(t), np.sin(t)], axis=-1)
    if shape.exact:
        # the singular kernel is not quasi-Lipschitz near 0; keep pairs away from it
        ok = (np.linalg.norm(x, axis=-1) > 2 * d) & (np.linalg.norm(xp, axis=-1) > 2 * d)
        x, xp, d = x[ok], xp[ok], d[ok]
    diff = np.linalg.norm(kernel_eval(shape, x) - kernel_eval(shape, xp), axis=-1)
    return diff / quasi_lipschitz_modulus(d), d


@dataclass(frozen=True)
class L1Distance:
    epsilon: float
    value: float
    bound: float
    ratio: float
    holds: bool

    def to_dict(self):
        return asdict(self)


def l1_kernel_distance(shape: ShapeTable, epsilon: float | None = None) -> L1Distance:
    """L1 distance between the regularised and singular kernels.

    Uses the radial reduction ``eps * int_0^inf |G(r) - 1| dr`` on the table and
    compares with ``eps * int_0^inf k^2 |h_r(k)| dk``.
    """
    eps = shape.epsilon if epsilon is None else float(epsilon)
    if shape.exact:
        return L1Distance(eps, 0.0, 0.0, 1.0, True)
    g = shape.grid
    r1 = g[1]
    core = gauss_legendre_segments(lambda r: np.abs(1.0 - shape.shape(r)), np.array([0.0, r1]), 20)
    body = gauss_legendre_segments(lambda r: np.abs(shape.tail(r)), g[1:], 10)
    # tail model T(r_max) (r_max/r)^2 beyond the table
    outer = shape.tail_at_rmax * shape.tail_radius
    integral = float(core.sum() + np.sum(body) + abs(outer))
    value = eps * integral
    bound = eps * shape.first_radial_moment
    holds = value <= bound * (1.0 + 1e-9) + 1e-14
    return L1Distance(eps, value, bound, value / bound if bound else np.nan, bool(holds))

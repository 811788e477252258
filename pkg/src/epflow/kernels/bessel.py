"""Modified Bessel functions of the second kind, orders 0 and 1.

Power series below x = 2; above it, Steed's continued fraction for the ratio
K1/K0 together with Temme's normalisation sum (Thompson & Barnett's CF2).
Both branches are accurate to a few ulp in double precision.
"""

from __future__ import annotations

import numpy as np

__all__ = ["bessel_k0", "bessel_k1", "bessel_k0k1", "one_minus_x_k1"]

EULER_GAMMA = 0.57721566490153286060651209008240243
_SWITCH = 2.0
_N_SERIES = 30
_CF_EPS = 1e-17
_CF_MAXIT = 10_000

# series coefficients: c_k = (1/4)^k / (k!)^2 and d_k = (1/4)^k / (k!(k+1)!)
_k = np.arange(_N_SERIES)
_fact = np.cumprod(np.concatenate([[1.0], np.arange(1, _N_SERIES + 1, dtype=float)]))
_C0 = 1.0 / (_fact[_k] ** 2)
_C1 = 1.0 / (_fact[_k] * _fact[_k + 1])
_HARM = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, _N_SERIES + 1))])
_PSI1 = -EULER_GAMMA + _HARM[_k]          # psi(k+1)
_PSI2 = -EULER_GAMMA + _HARM[_k + 1]      # psi(k+2)


def _horner(z, coef):
    out = np.zeros_like(z)
    for c in coef[::-1]:
        out = out * z + c
    return out


def _series(x):
    """K0, K1 and 1 - x K1 from the ascending series (x <= 2)."""
    z = 0.25 * x * x
    lg = np.log(0.5 * x)
    i0 = _horner(z, _C0)
    i1 = 0.5 * x * _horner(z, _C1)
    k0 = -(lg + EULER_GAMMA) * i0 + _horner(z, _C0 * _HARM[_k])
    s1 = _horner(z, _C1 * (_PSI1 + _PSI2))
    k1 = 1.0 / x + lg * i1 - 0.25 * x * s1
    # 1 - x K1 without the cancellation of the leading 1/x term
    om = -x * lg * i1 + z * s1
    return k0, k1, om


def _steed(x):
    """K0, K1 via Steed's CF2 for x >= 2 (vectorised)."""
    x = np.asarray(x, float)
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = -a1
    s = 1.0 + q * delh
    active = np.ones(x.shape, bool)
    # converged entries keep iterating (h and s stay frozen) and may overflow
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, _CF_MAXIT + 1):
            a -= 2 * i
            c = -a * c / (i + 1.0)
            qnew = (q1 - b * q2) / a
            q1, q2 = q2, qnew
            q = q + c * qnew
            b = b + 2.0
            d = 1.0 / (b + a * d)
            delh = (b * d - 1.0) * delh
            dels = q * delh
            h = np.where(active, h + delh, h)
            s = np.where(active, s + dels, s)
            active &= np.abs(dels / s) >= _CF_EPS
            if not active.any():
                break
        else:  # pragma: no cover
            raise ArithmeticError("continued fraction for K0/K1 did not converge")
    h = a1 * h
    k0 = np.sqrt(np.pi / (2.0 * x)) * np.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k0k1(x):
    """Return ``(K0(x), K1(x))`` for ``x > 0``; arrays broadcast."""
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("modified Bessel K is only defined here for x > 0")
    k0 = np.empty_like(x)
    k1 = np.empty_like(x)
    lo = x < _SWITCH
    if lo.any():
        a, b, _ = _series(x[lo])
        k0[lo], k1[lo] = a, b
    hi = ~lo
    if hi.any():
        a, b = _steed(x[hi])
        k0[hi], k1[hi] = a, b
    if k0.ndim == 0:
        return float(k0), float(k1)
    return k0, k1


def bessel_k0(x):
    return bessel_k0k1(x)[0]


def bessel_k1(x):
    return bessel_k0k1(x)[1]


def one_minus_x_k1(x):
    """``1 - x K1(x)`` for ``x >= 0``, exact 0 at the origin."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("argument must be nonnegative")
    out = np.zeros_like(x)
    lo = (x > 0) & (x < _SWITCH)
    if lo.any():
        out[lo] = _series(x[lo])[2]
    hi = x >= _SWITCH
    if hi.any():
        out[hi] = 1.0 - x[hi] * _steed(x[hi])[1]
    return float(out) if out.ndim == 0 else out

"""Pure numpy fallback with the same interface as the compiled ``_core``."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi
_BLOCK = 64


def _segment(grid, n_lin, log_step, rho):
    i = np.searchsorted(grid, rho, side="right") - 1
    return np.clip(i, 1, grid.size - 2)


def _hermite(x, y, d, i, r):
    # increment form: exact at both nodes, rounding relative to the increment
    h = x[i + 1] - x[i]
    t = (r - x[i]) / h
    s = 1.0 - t
    dy = y[i + 1] - y[i]
    return y[i] + t * t * (3.0 - 2.0 * t) * dy + h * t * s * (s * d[i] - t * d[i + 1])


def _factor(r2, args):
    grid, val, slp, _, _, eps, exact, ca, cb, r_max, t_max, n_lin, log_step = args
    out = np.zeros_like(r2)
    pos = r2 > 0
    if exact:
        out[pos] = 1.0 / r2[pos]
        return out
    r = np.sqrt(r2)
    rho = r / eps
    core = pos & (rho < grid[1])
    far = pos & (rho > r_max)
    mid = pos & ~core & ~far
    if core.any():
        if cb == 0.0:
            out[core] = ca / (eps * eps)
        else:
            out[core] = (ca - cb * np.log(rho[core])) / (eps * eps)
    if far.any():
        q = r_max / rho[far]
        out[far] = (1.0 - t_max * q * q) / r2[far]
    if mid.any():
        rm = rho[mid]
        out[mid] = _hermite(grid, val, slp, _segment(grid, n_lin, log_step, rm), rm) / r2[mid]
    return out


def _stream(r, args):
    grid, _, _, sval, sslp, eps, exact, ca, cb, r_max, t_max, n_lin, log_step = args
    shift = np.log(eps) / TWO_PI
    if exact:
        return -np.log(r) / TWO_PI
    rho = r / eps
    out = np.empty_like(r)
    core = rho < grid[1]
    far = rho > r_max
    mid = ~core & ~far
    if core.any():
        rc = rho[core]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = 0.5 * ca * rc * rc - cb * (0.5 * rc * rc * np.log(rc) - 0.25 * rc * rc)
        c = np.where(rc > 0, c, 0.0)
        out[core] = sval[0] - c / TWO_PI - shift
    if far.any():
        q = r_max / rho[far]
        out[far] = -(np.log(rho[far]) + 0.5 * t_max * q * q) / TWO_PI - shift
    if mid.any():
        rm = rho[mid]
        out[mid] = _hermite(grid, sval, sslp, _segment(grid, n_lin, log_step, rm), rm) - shift
    return out


def shape_factor(r2, shape_args):
    return _factor(np.asarray(r2, float), shape_args)


def velocity_block(src, gamma, tgt, out, start, stop, skip_self, shape_args):
    exact = shape_args[6]
    bad = -1
    n_src = src.shape[0]
    for b0 in range(start, stop, _BLOCK):
        b1 = min(b0 + _BLOCK, stop)
        dx = tgt[b0:b1, 0, None] - src[None, :, 0]
        dy = tgt[b0:b1, 1, None] - src[None, :, 1]
        r2 = dx * dx + dy * dy
        zero = r2 == 0.0
        if skip_self:
            rows = np.arange(b0, b1)
            ok = rows < n_src
            zero[rows[ok] - b0, rows[ok]] = False
            r2[rows[ok] - b0, rows[ok]] = 0.0
        if exact and bad < 0 and zero.any():
            bad = b0 + int(np.argmax(zero.any(axis=1)))
        f = gamma[None, :] * _factor(r2, shape_args)
        out[b0:b1, 0] = np.sum(-dy * f, axis=1) / TWO_PI
        out[b0:b1, 1] = np.sum(dx * f, axis=1) / TWO_PI
    return bad


def energy_rows(pos, gamma, out, start, stop, shape_args):
    exact = shape_args[6]
    bad = -1
    n = pos.shape[0]
    for b0 in range(start, stop, _BLOCK):
        b1 = min(b0 + _BLOCK, stop)
        dx = pos[b0:b1, 0, None] - pos[None, :, 0]
        dy = pos[b0:b1, 1, None] - pos[None, :, 1]
        r = np.sqrt(dx * dx + dy * dy)
        rows = np.arange(b0, b1)
        self_mask = np.zeros(r.shape, bool)
        self_mask[rows - b0, rows] = True
        skip = self_mask
        if exact:
            zero = (r == 0.0) & ~self_mask
            if bad < 0 and zero.any():
                bad = b0 + int(np.argmax(zero.any(axis=1)))
            skip = self_mask | zero
        g = _stream(np.where(skip, 1.0, r), shape_args)
        g[skip] = 0.0
        out[b0:b1] = np.sum(gamma[None, :] * g, axis=1)
    return bad

"""Backend selection and the thread-pool driver for the N-body kernels.

The compiled ``_core`` extension is used when importable; otherwise the numpy
implementation in ``_pycore``. Set ``EPFLOW_BACKEND=python`` to force the
fallback. Targets are cut into fixed-size chunks independent of the worker
count and each target is reduced serially, so results are bit-identical for
any number of threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _pycore

if os.environ.get("EPFLOW_BACKEND", "").lower() == "python":
    _impl = _pycore
    NAME = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
        NAME = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pycore
        NAME = "python"

CHUNK = 128

_threads = 1
_pool: ThreadPoolExecutor | None = None


class CollisionError(ArithmeticError):
    """Exact-kernel evaluation at zero separation between distinct particles."""


def set_threads(n: int) -> None:
    global _threads, _pool
    n = int(n)
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if n != _threads and _pool is not None:
        _pool.shutdown()
        _pool = None
    _threads = n


def get_threads() -> int:
    return _threads


def _run(fn, n_items):
    chunks = [(a, min(a + CHUNK, n_items)) for a in range(0, n_items, CHUNK)]
    if _threads == 1 or len(chunks) == 1:
        return [fn(a, b) for a, b in chunks]
    global _pool
    if _pool is None:
        _pool = ThreadPoolExecutor(max_workers=_threads)
    return list(_pool.map(lambda ab: fn(*ab), chunks))


def get_impl(name: str | None = None):
    if name is None:
        return _impl
    if name == "python":
        return _pycore
    if name == "cython":
        from . import _core  # type: ignore[attr-defined]
        return _core
    raise ValueError(f"unknown backend {name!r}")


def velocity(src, gamma, tgt, shape, *, skip_self=False, impl=None):
    """Sum_j gamma_j K_h(tgt_i - src_j) for every target, shape (M, 2)."""
    impl = impl or _impl
    src = np.ascontiguousarray(src, float)
    tgt = np.ascontiguousarray(tgt, float)
    gamma = np.ascontiguousarray(gamma, float)
    out = np.zeros((tgt.shape[0], 2))
    if tgt.shape[0] == 0 or src.shape[0] == 0:
        return out
    args = shape.cython_args()
    bad = _run(lambda a, b: impl.velocity_block(src, gamma, tgt, out, a, b, int(skip_self), args),
               tgt.shape[0])
    hits = [i for i in bad if i >= 0]
    if hits:
        raise CollisionError(f"exact kernel evaluated at zero separation (target {min(hits)})")
    return out


def energy_rows(pos, gamma, shape, *, impl=None):
    """Per-particle sums sum_{j != i} gamma_j G(|x_i - x_j|)."""
    impl = impl or _impl
    pos = np.ascontiguousarray(pos, float)
    gamma = np.ascontiguousarray(gamma, float)
    out = np.zeros(pos.shape[0])
    if pos.shape[0] < 2:
        return out
    args = shape.cython_args()
    bad = _run(lambda a, b: impl.energy_rows(pos, gamma, out, a, b, args), pos.shape[0])
    hits = [i for i in bad if i >= 0]
    if hits:
        raise CollisionError(f"exact stream function evaluated at zero separation (particle {min(hits)})")
    return out

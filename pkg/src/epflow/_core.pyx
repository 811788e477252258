# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled N-body kernels: shape-table lookup, induced velocity, pair energy.

Every target is summed over sources in index order, so results do not depend
on how targets are split between worker threads.
"""

from libc.math cimport log, sqrt

cdef double TWO_PI = 6.283185307179586476925286766559


cdef struct Shape:
    const double* grid
    const double* val
    const double* slp
    const double* sval
    const double* sslp
    Py_ssize_t n
    Py_ssize_t n_lin
    double log_step
    double inv_log_step
    double eps
    double inv_eps
    double inv_eps2
    int exact
    double core_a
    double core_b
    double r_max
    double t_max


cdef inline Py_ssize_t _segment(const Shape* s, double rho) noexcept nogil:
    cdef Py_ssize_t i
    if rho < 1.0:
        i = <Py_ssize_t>(rho * (s.n_lin - 1))
    else:
        i = s.n_lin - 1 + <Py_ssize_t>(log(rho) * s.inv_log_step)
    if i < 1:
        i = 1
    if i > s.n - 2:
        i = s.n - 2
    while i > 1 and rho < s.grid[i]:
        i -= 1
    while i < s.n - 2 and rho >= s.grid[i + 1]:
        i += 1
    return i


cdef inline double _hermite(const double* x, const double* y, const double* d,
                            Py_ssize_t i, double r) noexcept nogil:
    # increment form: exact at both nodes, rounding relative to the increment
    cdef double h = x[i + 1] - x[i]
    cdef double t = (r - x[i]) / h
    cdef double s = 1.0 - t
    return y[i] + t * t * (3.0 - 2.0 * t) * (y[i + 1] - y[i]) + h * t * s * (s * d[i] - t * d[i + 1])


cdef inline double _factor(const Shape* s, double r2) noexcept nogil:
    """G(|x|/eps) / |x|^2, zero at the origin."""
    cdef double rho, q
    if r2 == 0.0:
        return 0.0
    if s.exact:
        return 1.0 / r2
    rho = sqrt(r2) * s.inv_eps
    if rho < s.grid[1]:
        if s.core_b == 0.0:
            return s.core_a * s.inv_eps2
        return (s.core_a - s.core_b * log(rho)) * s.inv_eps2
    if rho > s.r_max:
        q = s.r_max / rho
        return (1.0 - s.t_max * q * q) / r2
    return _hermite(s.grid, s.val, s.slp, _segment(s, rho), rho) / r2


cdef inline double _stream(const Shape* s, double r) noexcept nogil:
    """G^eps_r(r); the exact kernel gives -log(r)/(2 pi)."""
    cdef double rho, q, c
    if s.exact:
        return -log(r) / TWO_PI
    rho = r / s.eps
    if rho < s.grid[1]:
        if rho > 0.0:
            c = 0.5 * s.core_a * rho * rho - s.core_b * (0.5 * rho * rho * log(rho) - 0.25 * rho * rho)
        else:
            c = 0.0
        return s.sval[0] - c / TWO_PI - log(s.eps) / TWO_PI
    if rho > s.r_max:
        q = s.r_max / rho
        return -(log(rho) + 0.5 * s.t_max * q * q) / TWO_PI - log(s.eps) / TWO_PI
    return _hermite(s.grid, s.sval, s.sslp, _segment(s, rho), rho) - log(s.eps) / TWO_PI


cdef Shape _make_shape(tuple args):
    # the caller keeps ``args`` alive, so the buffer pointers stay valid
    cdef const double[::1] grid = args[0]
    cdef const double[::1] val = args[1]
    cdef const double[::1] slp = args[2]
    cdef const double[::1] sval = args[3]
    cdef const double[::1] sslp = args[4]
    cdef Shape s
    s.grid = &grid[0]
    s.val = &val[0]
    s.slp = &slp[0]
    s.sval = &sval[0]
    s.sslp = &sslp[0]
    s.n = grid.shape[0]
    s.eps = args[5]
    s.inv_eps = 1.0 / s.eps
    s.inv_eps2 = s.inv_eps * s.inv_eps
    s.exact = args[6]
    s.core_a = args[7]
    s.core_b = args[8]
    s.r_max = args[9]
    s.t_max = args[10]
    s.n_lin = args[11]
    s.log_step = args[12]
    s.inv_log_step = 1.0 / s.log_step if s.log_step > 0 else 0.0
    return s


def shape_factor(double[::1] r2, tuple shape_args):
    """Vectorised G(|x|/eps)/|x|^2 for squared radii (testing hook)."""
    cdef Shape s = _make_shape(shape_args)
    cdef Py_ssize_t i, n = r2.shape[0]
    out = __import__("numpy").empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _factor(&s, r2[i])
    return out


def velocity_block(const double[:, ::1] src, const double[::1] gamma,
                   const double[:, ::1] tgt, double[:, ::1] out,
                   Py_ssize_t start, Py_ssize_t stop, int skip_self, tuple shape_args):
    """out[i] = sum_j gamma_j K_h(tgt_i - src_j) for start <= i < stop.

    Returns the first target index that collides with a distinct source under
    the exact kernel, or -1.
    """
    cdef Shape s = _make_shape(shape_args)
    cdef Py_ssize_t i, j, n_src = src.shape[0]
    cdef Py_ssize_t bad = -1
    cdef double xi, yi, dx, dy, r2, f, ux, uy
    with nogil:
        for i in range(start, stop):
            xi = tgt[i, 0]
            yi = tgt[i, 1]
            ux = 0.0
            uy = 0.0
            for j in range(n_src):
                if skip_self and i == j:
                    continue
                dx = xi - src[j, 0]
                dy = yi - src[j, 1]
                r2 = dx * dx + dy * dy
                if r2 == 0.0:
                    if s.exact and bad < 0:
                        bad = i
                    continue
                f = gamma[j] * _factor(&s, r2)
                ux = ux - dy * f
                uy = uy + dx * f
            out[i, 0] = ux / TWO_PI
            out[i, 1] = uy / TWO_PI
    return bad


def energy_rows(const double[:, ::1] pos, const double[::1] gamma, double[::1] out,
                Py_ssize_t start, Py_ssize_t stop, tuple shape_args):
    """out[i] = sum_{j != i} gamma_j G(|x_i - x_j|); returns a colliding index or -1."""
    cdef Shape s = _make_shape(shape_args)
    cdef Py_ssize_t i, j, n = pos.shape[0]
    cdef Py_ssize_t bad = -1
    cdef double dx, dy, r, acc
    with nogil:
        for i in range(start, stop):
            acc = 0.0
            for j in range(n):
                if i == j:
                    continue
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                r = sqrt(dx * dx + dy * dy)
                if r == 0.0 and s.exact:
                    if bad < 0:
                        bad = i
                    continue
                acc = acc + gamma[j] * _stream(&s, r)
            out[i] = acc
    return bad

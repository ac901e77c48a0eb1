# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the exact event-driven path sampler and the RK4 MGF solver.

``_kernels_py.py`` holds the reference Python versions.  Any change here must
be mirrored there; the test suite checks the two agree bit for bit.
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, exp, ceil, INFINITY
from numpy.random cimport bitgen_t

DEF OK = 0
DEF OVERFLOW = 1


cdef inline bitgen_t* _bitgen(object bg) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(bg.capsule, "BitGenerator")


def simulate_path(object bitgen, const double[:, ::1] offdiag, const double[::1] exit_rates,
                  const double[::1] arr_rates, double mu, long long m0, Py_ssize_t j0,
                  double horizon, const double[::1] grid, long long max_events,
                  long long[::1] j_out, long long[::1] m_out, double[:, ::1] z_out,
                  long long[::1] counts, long long[:, ::1] trans):
    """Simulate one path of (J, M) on [0, horizon].

    Rates passed in are already scaled.  Grid samples are right-continuous.
    Returns 0, or 1 if more than ``max_events`` events were needed.
    """
    cdef bitgen_t *rng = _bitgen(bitgen)
    cdef Py_ssize_t d = exit_rates.shape[0]
    cdef Py_ssize_t n_grid = grid.shape[0]
    cdef Py_ssize_t i, j = j0, k = 0, target, last
    cdef long long m = m0, events = 0, n_arr = 0, n_dep = 0, n_bg = 0
    cdef double t = 0.0, t_next, dt, u, acc, total, rate_bg, rate_arr, rate_dep
    cdef double z[64]
    cdef int status = OK
    if d > 64:
        raise ValueError("at most 64 background states are supported")
    for i in range(d):
        z[i] = 0.0

    with nogil:
        while True:
            rate_bg = exit_rates[j]
            rate_arr = arr_rates[j]
            rate_dep = mu * m
            total = rate_bg + rate_arr + rate_dep
            if total > 0.0:
                u = rng.next_double(rng.state)
                dt = -log(1.0 - u) / total
                t_next = t + dt
            else:
                dt = INFINITY
                t_next = INFINITY
            while k < n_grid and grid[k] < t_next:
                for i in range(d):
                    z_out[k, i] = z[i]
                z_out[k, j] = z[j] + (grid[k] - t)
                j_out[k] = j
                m_out[k] = m
                k += 1
            if t_next > horizon:
                z[j] = z[j] + (horizon - t)
                break
            z[j] = z[j] + dt
            t = t_next
            events += 1
            if events > max_events:
                status = OVERFLOW
                break
            u = rng.next_double(rng.state) * total
            if u < rate_bg:
                target = -1
                acc = 0.0
                last = -1
                for i in range(d):
                    if i == j or offdiag[j, i] <= 0.0:
                        continue
                    last = i
                    acc = acc + offdiag[j, i]
                    if u < acc:
                        target = i
                        break
                if target < 0:
                    target = last
                trans[j, target] += 1
                n_bg += 1
                j = target
            elif u < rate_bg + rate_arr or m == 0:
                if rate_arr > 0.0:
                    m += 1
                    n_arr += 1
                else:
                    target = -1
                    for i in range(d):
                        if i != j and offdiag[j, i] > 0.0:
                            target = i
                    trans[j, target] += 1
                    n_bg += 1
                    j = target
            else:
                m -= 1
                n_dep += 1
    counts[0] = n_arr
    counts[1] = n_dep
    counts[2] = n_bg
    return status


cdef inline void _rhs(const double[:, ::1] A, const double[::1] w, double mu, double t,
                      double *y, double *out, Py_ssize_t d) noexcept nogil:
    cdef double f = exp(-mu * t)
    cdef double s
    cdef Py_ssize_t i, j
    for i in range(d):
        s = 0.0
        for j in range(d):
            s = s + A[i, j] * y[j]
        out[i] = s + w[i] * f * y[i]


def rk4_mgf(const double[:, ::1] A, const double[::1] w, double mu, const double[::1] y0,
            const double[::1] times, double h_max, double[:, ::1] out):
    """Classical RK4 for ``y' = A y + w exp(-mu t) * y`` sampled at ``times``."""
    cdef Py_ssize_t d = y0.shape[0]
    cdef Py_ssize_t i, k, s, n
    cdef double t0, t1, h, t
    cdef double y[64]
    cdef double k1[64]
    cdef double k2[64]
    cdef double k3[64]
    cdef double k4[64]
    cdef double tmp[64]
    if d > 64:
        raise ValueError("at most 64 background states are supported")
    for i in range(d):
        y[i] = y0[i]
        out[0, i] = y[i]
    with nogil:
        for k in range(1, times.shape[0]):
            t0 = times[k - 1]
            t1 = times[k]
            n = <Py_ssize_t> ceil((t1 - t0) / h_max)
            if n < 1:
                n = 1
            h = (t1 - t0) / n
            for s in range(n):
                t = t0 + s * h
                _rhs(A, w, mu, t, y, k1, d)
                for i in range(d):
                    tmp[i] = y[i] + 0.5 * h * k1[i]
                _rhs(A, w, mu, t + 0.5 * h, tmp, k2, d)
                for i in range(d):
                    tmp[i] = y[i] + 0.5 * h * k2[i]
                _rhs(A, w, mu, t + 0.5 * h, tmp, k3, d)
                for i in range(d):
                    tmp[i] = y[i] + h * k3[i]
                _rhs(A, w, mu, t + h, tmp, k4, d)
                for i in range(d):
                    y[i] = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            for i in range(d):
                out[k, i] = y[i]
    return OK

"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Both modules must stay operation-for-operation identical: given the same
bit generator state they produce bit-identical output.  Uniform variates
are consumed in the same order (one for the holding time, one for the
event choice) and all floating-point expressions are evaluated in the same
order.
"""
import math

import numpy as np

OK = 0
OVERFLOW = 1

_BLOCK = 1024


class _Uniforms:
    """Block-buffered ``next_double`` stream of a numpy bit generator."""

    def __init__(self, bitgen):
        self._gen = np.random.Generator(bitgen)
        self._buf = []
        self._pos = 0

    def next(self):
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u


def simulate_path(bitgen, offdiag, exit_rates, arr_rates, mu, m0, j0, horizon,
                  grid, max_events, j_out, m_out, z_out, counts, trans):
    """Event-driven simulation of (J, M); see ``_kernels.pyx`` for the contract."""
    rng = _Uniforms(bitgen)
    d = len(exit_rates)
    offdiag = [list(map(float, row)) for row in offdiag]
    exit_rates = [float(x) for x in exit_rates]
    arr_rates = [float(x) for x in arr_rates]
    grid = [float(g) for g in grid]
    n_grid = len(grid)
    mu = float(mu)
    horizon = float(horizon)

    z = [0.0] * d
    t = 0.0
    j = int(j0)
    m = int(m0)
    k = 0
    n_arr = n_dep = n_bg = 0
    events = 0
    status = OK
    while True:
        rate_bg = exit_rates[j]
        rate_arr = arr_rates[j]
        rate_dep = mu * m
        total = rate_bg + rate_arr + rate_dep
        if total > 0.0:
            u = rng.next()
            dt = -math.log(1.0 - u) / total
            t_next = t + dt
        else:
            dt = math.inf
            t_next = math.inf
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
        u = rng.next() * total
        if u < rate_bg:
            target = -1
            acc = 0.0
            last = -1
            row = offdiag[j]
            for i in range(d):
                if i == j or row[i] <= 0.0:
                    continue
                last = i
                acc = acc + row[i]
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
                # roundoff pushed u past the only live channel
                target = -1
                row = offdiag[j]
                for i in range(d):
                    if i != j and row[i] > 0.0:
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


def _rhs(A, w, mu, t, y, d):
    f = math.exp(-mu * t)
    out = [0.0] * d
    for i in range(d):
        s = 0.0
        row = A[i]
        for j in range(d):
            s = s + row[j] * y[j]
        out[i] = s + w[i] * f * y[i]
    return out


def rk4_mgf(A, w, mu, y0, times, h_max, out):
    """Classical RK4 for ``y' = A y + w exp(-mu t) * y`` sampled at ``times``.

    ``times`` must start at 0 and increase; each interval is split into the
    fewest equal steps not longer than ``h_max``.  Rows of ``out`` receive
    the state at each time.
    """
    d = len(y0)
    A = [list(map(float, row)) for row in A]
    w = [float(x) for x in w]
    mu = float(mu)
    h_max = float(h_max)
    y = [float(x) for x in y0]
    for i in range(d):
        out[0, i] = y[i]
    for k in range(1, len(times)):
        t0 = float(times[k - 1])
        t1 = float(times[k])
        n = int(math.ceil((t1 - t0) / h_max))
        if n < 1:
            n = 1
        h = (t1 - t0) / n
        for s in range(n):
            t = t0 + s * h
            k1 = _rhs(A, w, mu, t, y, d)
            y2 = [y[i] + 0.5 * h * k1[i] for i in range(d)]
            k2 = _rhs(A, w, mu, t + 0.5 * h, y2, d)
            y3 = [y[i] + 0.5 * h * k2[i] for i in range(d)]
            k3 = _rhs(A, w, mu, t + 0.5 * h, y3, d)
            y4 = [y[i] + h * k3[i] for i in range(d)]
            k4 = _rhs(A, w, mu, t + h, y4, d)
            y = [y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in range(d)]
        for i in range(d):
            out[k, i] = y[i]
    return OK

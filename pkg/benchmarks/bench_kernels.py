"""Compiled vs pure-Python kernel timings.

Run with ``python benchmarks/bench_kernels.py``.  Prints the best of
``--repeat`` runs for each kernel and backend plus the speed-up.
"""
import argparse
import timeit

import numpy as np

from mmisq import _backend, mgf_ode
from mmisq.model import ScalingSpec, example_model
from mmisq.simulator import make_grid, simulate_path


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--N", type=int, default=1000)
    args = ap.parse_args()

    backends = ["python"]
    try:
        _backend.load("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled kernels not available; timing the fallback only")

    model = example_model()
    grid = make_grid(5.0, 0.01)
    cases = {
        "simulate_path": lambda b: (lambda: simulate_path(model, ScalingSpec(args.N, 1.0), 5.0, grid, 1,
                                                          backend=b)),
        "rk4_mgf": lambda b: (lambda: mgf_ode.log_mgf_m_curve(model, args.N, 1.0, 0.01, grid, backend=b)),
    }
    path = simulate_path(model, ScalingSpec(args.N, 1.0), 5.0, grid, 1)
    events = path.arrivals + path.departures + path.background_jumps
    print(f"N = {args.N}, alpha = 1, horizon 5, {events} events per path")
    print(f"{'kernel':<15}" + "".join(f"{b:>12}" for b in backends) + f"{'speed-up':>12}")
    for name, make in cases.items():
        t = [bench(make(b), args.repeat) for b in backends]
        line = f"{name:<15}" + "".join(f"{x * 1e3:>10.2f}ms" for x in t)
        line += f"{t[-1] / t[0]:>11.1f}x" if len(t) == 2 else ""
        print(line)


if __name__ == "__main__":
    main()

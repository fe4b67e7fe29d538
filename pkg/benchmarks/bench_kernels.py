"""Benchmark the compiled numeric kernels against the pure-Python ones.

Both backends must produce bit-identical outputs; this script checks
that first and then reports per-call timings, so a speed regression or
a numeric divergence in either backend shows up in the same place.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import struct
import time

from swarmsim._kernels import _pure

try:
    from swarmsim._kernels import _core
except ImportError:
    _core = None

MU = 3.986004418e14
J2 = 1.08262668e-3
RE = 6378137.0
OMEGA = 7.2921150e-5

# leo-ish state, j2 on, drag on
RK4_ARGS = (6878137.0, 0.0, 0.0, 0.0, 6700.0, 3000.0, 60.0, 10.0,
            MU, J2, RE, 0.005, 6.967e-13, 500e3, 63822.0, OMEGA, 6478137.0)


def pack(values):
    if not isinstance(values, tuple):
        values = (values,)
    return b"".join(struct.pack("<d", float(v)) for v in values)


def check_identical():
    """Every kernel, dozens of inputs, byte-for-byte equal outputs."""
    if _core is None:
        return 0
    cases = 0
    for i in range(40):
        m = -6.0 + 0.31 * i
        e = 0.02 * i / 40
        assert pack(_pure.solve_kepler(m, e)) == \
               pack(_core.solve_kepler(m, e))
        a = 6778137.0 + 5000.0 * i
        el = (a, e, 0.9, 0.1 * i, 0.2, m, MU)
        assert pack(_pure.kepler_to_rv(*el)) == pack(_core.kepler_to_rv(*el))
        args = (RK4_ARGS[0] + 1000.0 * i,) + RK4_ARGS[1:]
        assert pack(_pure.rk4_span(*args)) == pack(_core.rk4_span(*args))
        cases += 3
    return cases


def bench(fn, args, repeat):
    n = 0
    best = math.inf
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        dt = time.perf_counter() - t0
        best = min(best, dt / repeat)
        n += repeat
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=2000,
                        help="calls per timing sample (default 2000)")
    args = parser.parse_args()

    cases = check_identical()
    if _core is None:
        print("compiled backend not built; timing pure backend only")
    else:
        print(f"bit-identity: {cases} cases OK")

    jobs = [
        ("solve_kepler", (2.1, 0.01)),
        ("kepler_to_rv", (6878137.0, 0.001, 0.9, 0.1, 0.2, 2.1, MU)),
        ("rk4_span 60s/h10", RK4_ARGS),
    ]
    print(f"{'kernel':<20} {'pure [us]':>10} {'compiled [us]':>14} "
          f"{'ratio':>7}")
    for name, call_args in jobs:
        fn_name = name.split()[0]
        t_pure = bench(getattr(_pure, fn_name), call_args, args.repeat)
        row = f"{name:<20} {t_pure * 1e6:>10.2f}"
        if _core is not None:
            t_core = bench(getattr(_core, fn_name), call_args, args.repeat)
            row += f" {t_core * 1e6:>14.2f} {t_pure / t_core:>6.1f}x"
        print(row)


if __name__ == "__main__":
    main()

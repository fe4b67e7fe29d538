"""The compiled and pure numeric kernels must agree bit for bit."""

import random

import pytest

from swarmsim._kernels import _pure

try:
    from swarmsim._kernels import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None,
                                reason="compiled kernels not built")

MU = 3.986004418e14
J2 = 1.08262668e-3
RE = 6378137.0
WE = 7.2921150e-5


@needs_core
def test_rk4_span_bitwise_equal():
    rng = random.Random(42)
    for _ in range(300):
        a = rng.uniform(6.6e6, 2.8e7)
        state = (a * rng.uniform(0.95, 1.05), rng.uniform(-1e6, 1e6),
                 rng.uniform(-1e6, 1e6), rng.uniform(-500, 500),
                 (MU / a) ** 0.5, rng.uniform(-500, 500))
        dt = rng.uniform(0.0, 900.0)
        h = rng.choice([1.0, 2.0, 3.7, 5.0, 10.0])
        j2 = rng.choice([0.0, J2])
        drag_k = rng.choice([0.0, 0.5 * 2.2 * 0.05 / 10.0])
        args = state + (dt, h, MU, j2, RE, drag_k,
                        6.967e-13, 500e3, 63.822e3, WE, RE)
        assert _pure.rk4_span(*args) == _core.rk4_span(*args)


@needs_core
def test_accel_bitwise_equal():
    rng = random.Random(1)
    for _ in range(300):
        args = (rng.uniform(6.6e6, 3e7), rng.uniform(-1e7, 1e7),
                rng.uniform(-1e7, 1e7), rng.uniform(-8e3, 8e3),
                rng.uniform(-8e3, 8e3), rng.uniform(-8e3, 8e3),
                MU, rng.choice([0.0, J2]), RE,
                rng.choice([0.0, 5e-4]), 6.967e-13, 500e3, 63.822e3, WE)
        assert _pure.accel(*args) == _core.accel(*args)


@needs_core
def test_kepler_solvers_bitwise_equal():
    rng = random.Random(2)
    for _ in range(500):
        M = rng.uniform(-3.2, 6.4)
        e = rng.uniform(0.0, 0.95)
        assert _pure.solve_kepler(M, e) == _core.solve_kepler(M, e)
        args = (rng.uniform(6.6e6, 3e7), rng.uniform(0, 0.8),
                rng.uniform(0, 3.1), rng.uniform(0, 6.28),
                rng.uniform(0, 6.28), M, MU)
        assert _pure.kepler_to_rv(*args) == _core.kepler_to_rv(*args)


def test_backend_names():
    from swarmsim._kernels import BACKEND
    assert BACKEND in ("pure", "compiled")
    assert _pure.BACKEND == "pure"
    if _core is not None:
        assert _core.BACKEND == "compiled"

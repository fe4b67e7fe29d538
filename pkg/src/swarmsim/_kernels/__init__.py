"""Numeric kernel selection: compiled extension if available, else pure.

Set SWARMSIM_PURE=1 before import to force the pure-Python kernels even
when the extension built. The two backends are bit-identical by
construction and by test; the choice is purely about speed.
"""

import os

if os.environ.get("SWARMSIM_PURE"):
    from . import _pure as impl
else:
    try:
        from . import _core as impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pure as impl

BACKEND = impl.BACKEND
accel = impl.accel
rk4_span = impl.rk4_span
solve_kepler = impl.solve_kepler
kepler_to_rv = impl.kepler_to_rv

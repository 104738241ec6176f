"""Backend selection for the simulation kernels.

The compiled extension (``_kernels_c``) is used when it imports; otherwise
the pure-Python implementation in ``_kernels_py`` is used.  Setting the
environment variable ``SELFTIMED_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py
from ._kernels_py import EventExplosion, QUIESCENT, STOPPED, TIME_LIMIT

__all__ = ["BACKEND", "EventExplosion", "EventSim", "settle", "backend_module",
           "QUIESCENT", "STOPPED", "TIME_LIMIT"]

_impl = _kernels_py
BACKEND = "python"
if not os.environ.get("SELFTIMED_PURE_PYTHON"):
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py


def backend_module(name: str | None = None):
    """Return the kernel module for ``"compiled"``, ``"python"`` or the default."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _kernels_c

        return _kernels_c
    raise ValueError(f"unknown backend {name!r}")


def settle(compiled, values: np.ndarray, max_sweeps: int, backend=None) -> int:
    """Settle ``values`` in place; raises ``Oscillation`` if it never does."""
    from .netlist import Oscillation

    mod = backend_module(backend)
    n = mod.settle(compiled.op, compiled.inv, compiled.in_ptr, compiled.in_idx,
                   compiled.out, values, max_sweeps)
    if n < 0:
        raise Oscillation(f"no fixed point within {max_sweeps} sweeps")
    return n


def EventSim(compiled, gkey, rise, fall, values, max_events: int, backend=None):
    mod = backend_module(backend)
    return mod.EventSim(compiled.op, compiled.inv, compiled.in_ptr, compiled.in_idx,
                        compiled.out, compiled.fan_ptr, compiled.fan_idx, gkey,
                        rise, fall, values, max_events)

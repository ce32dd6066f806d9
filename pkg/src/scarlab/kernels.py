"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it imports; otherwise the numpy
fallback is used. Setting ``SCARLAB_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _fallback

MODE_H = _fallback.MODE_H
MODE_PLUS = _fallback.MODE_PLUS
MODE_MINUS = _fallback.MODE_MINUS

_core = None
if os.environ.get("SCARLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        _core = None

BACKEND = "cython" if _core is not None else "numpy"
_impl = _core if _core is not None else _fallback


def flip_matvec(states, ranks, lookup, fib, L, pbc, mode, v, out):
    return _impl.flip_matvec(states, ranks, lookup, fib, L, pbc, mode, v, out)


def orbit_canonical(states, L, inversion):
    return _impl.orbit_canonical(states, L, inversion)


def backends():
    """Mapping of available backend names to kernel modules."""
    found = {"numpy": _fallback}
    if _core is not None:
        found["cython"] = _core
    return found


def mod_factor(A, p):
    return _impl.mod_factor(A, p)


def mod_solve(A, pivots, diag, B, p):
    return _impl.mod_solve(A, pivots, diag, B, p)

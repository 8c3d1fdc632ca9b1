"""Optional numba acceleration.

Set ``CSPATH_DISABLE_NUMBA=1`` to run every kernel as plain numpy/Python.
The decorated objects always expose the interpreted function as ``.py_func``
so both paths stay reachable from tests and benchmarks.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("CSPATH_DISABLE_NUMBA", "0").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and not NUMBA_DISABLED


def njit(fn):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    fn.py_func = fn
    return fn


def backend():
    return "numba" if USE_NUMBA else "numpy"

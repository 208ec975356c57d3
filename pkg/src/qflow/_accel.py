"""Numba switch.

Set ``QFLOW_NUMBA=0`` in the environment before importing :mod:`qflow` to run
every kernel through its pure-numpy path.  Both paths are always importable
from :mod:`qflow.kernels` so they can be compared directly.
"""

import os

USE_NUMBA = os.environ.get("QFLOW_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")

try:
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False
    USE_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` with caching and numpy float semantics; identity decorator when numba is missing."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("error_model", "numpy")
    if not HAS_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _njit(*args, **kwargs)

"""Numba switch.

Kernels in :mod:`bkflow.kernels` come in two flavours: an ``@njit`` scalar-loop
version and a vectorised numpy version.  The numba path is used when numba
imports and ``BKFLOW_NUMBA`` is not set to ``0``/``false``/``off``.
"""
import os

_FLAG = os.environ.get("BKFLOW_NUMBA", "1").strip().lower()

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("0", "false", "off", "no")


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if not HAS_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)

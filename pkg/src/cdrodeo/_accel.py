"""Backend selection for the hot loops.

Set ``CDRODEO_BACKEND=numpy`` to bypass numba and run the vectorised numpy
path. The default is ``numba`` when it imports, ``numpy`` otherwise.
"""

from __future__ import annotations

import os

import numpy as np

_requested = os.environ.get("CDRODEO_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"CDRODEO_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

USE_NUMBA = _requested == "numba" and _numba is not None
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if USE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(func)
    return func


@jit
def _pairwise_sum_nb(values):
    buf = values.copy()
    m = buf.shape[0]
    if m == 0:
        return 0.0
    while m > 1:
        half = m // 2
        for i in range(half):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if m & 1:
            buf[half] = buf[m - 1]
            m = half + 1
        else:
            m = half
    return buf[0]


def _pairwise_sum_np(values):
    buf = np.asarray(values, dtype=np.float64)
    if buf.shape[0] == 0:
        return 0.0
    while buf.shape[0] > 1:
        m = buf.shape[0]
        half = m // 2
        paired = buf[0 : 2 * half : 2] + buf[1 : 2 * half : 2]
        if m & 1:
            paired = np.append(paired, buf[m - 1])
        buf = paired
    return float(buf[0])


def pairwise_sum(values) -> float:
    """Tree reduction: adjacent pairs are added level by level, an odd tail is carried.

    Both backends perform the same additions in the same order, so for
    identical inputs the result is bit-identical.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if USE_NUMBA:
        return float(_pairwise_sum_nb(values))
    return _pairwise_sum_np(values)

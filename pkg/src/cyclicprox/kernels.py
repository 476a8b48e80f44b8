"""Backend selection for the pairwise point-set kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback. Set ``CYCLICPROX_PURE_PYTHON=1`` to force the fallback.
All arrays handed to the backend are C-contiguous float64 of shape (n, d).
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("CYCLICPROX_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels_c as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def _prep(A):
    return np.ascontiguousarray(A, dtype=np.float64)


def pairwise(X, Y, backend=None):
    return (backend or _impl).pairwise(_prep(X), _prep(Y))


def row_min(X, Y, backend=None):
    return np.asarray((backend or _impl).row_min(_prep(X), _prep(Y)))


def pair_extrema(X, Y, backend=None):
    lo, hi = (backend or _impl).pair_extrema(_prep(X), _prep(Y))
    return float(lo), float(hi)


def available_backends():
    """Map of backend name to module, for benchmarks and equivalence tests."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_c
    except ImportError:
        pass
    else:
        out["cython"] = _kernels_c
    return out

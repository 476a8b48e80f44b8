"""Numpy implementations of the pairwise point-set kernels.

Used when the compiled module is unavailable or when
``CYCLICPROX_PURE_PYTHON=1`` is set. Signatures match ``_kernels_c``.
"""
import numpy as np

# rows of X processed per block; bounds the (block, m, d) temporary
_BLOCK = 256


def _sq_blocks(X, Y):
    for start in range(0, X.shape[0], _BLOCK):
        diff = X[start:start + _BLOCK, None, :] - Y[None, :, :]
        yield start, np.einsum("ijk,ijk->ij", diff, diff)


def pairwise(X, Y):
    """Full (n, m) Euclidean distance matrix."""
    out = np.empty((X.shape[0], Y.shape[0]))
    for start, sq in _sq_blocks(X, Y):
        out[start:start + sq.shape[0]] = np.sqrt(sq)
    return out


def row_min(X, Y):
    """For each row of X, the distance to the nearest row of Y."""
    out = np.empty(X.shape[0])
    for start, sq in _sq_blocks(X, Y):
        out[start:start + sq.shape[0]] = np.sqrt(sq.min(axis=1))
    return out


def pair_extrema(X, Y):
    """(min, max) of the Euclidean distance over all pairs."""
    lo, hi = np.inf, 0.0
    for _, sq in _sq_blocks(X, Y):
        lo = min(lo, sq.min())
        hi = max(hi, sq.max())
    return float(np.sqrt(lo)), float(np.sqrt(hi))

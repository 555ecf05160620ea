"""Pure numpy implementations of the Hankel kernels.

Used when the compiled ``_core`` extension is unavailable or disabled with
``HANKELRECON_PURE_PYTHON=1``. Signatures match ``_core`` exactly.
"""

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


@lru_cache(maxsize=64)
def _antidiag_index(n1, n2):
    idx = (np.arange(n1)[:, None] + np.arange(n2)[None, :]).ravel()
    counts = np.bincount(idx).astype(float)
    return idx, counts


def hankel_matrix(x, n1):
    x = np.ascontiguousarray(x, dtype=complex)
    # rows of the window view are x[i:i+n2]
    return sliding_window_view(x, x.shape[0] - n1 + 1).copy()


def hankel_times(x, q, n1):
    """``H(x) @ q`` for a Hankel matrix with ``n1`` rows."""
    # contiguous copy so the product goes through BLAS
    return hankel_matrix(x, n1) @ q


def hankel_h_times(x, p, n2):
    """``H(x)^H @ p`` for a Hankel matrix with ``n2`` columns."""
    x = np.asarray(x, dtype=complex)
    win = sliding_window_view(x, n2)
    return win.conj().T @ p


def antidiag_mean(z):
    """Average ``z`` along its anti-diagonals."""
    n1, n2 = z.shape
    idx, counts = _antidiag_index(n1, n2)
    flat = np.asarray(z).ravel()
    re = np.bincount(idx, weights=flat.real, minlength=n1 + n2 - 1)
    im = np.bincount(idx, weights=flat.imag, minlength=n1 + n2 - 1)
    return (re + 1j * im) / counts


def lowrank_antidiag_mean(p, q):
    """Anti-diagonal average of ``p @ q^H``."""
    return antidiag_mean(p @ q.conj().T)

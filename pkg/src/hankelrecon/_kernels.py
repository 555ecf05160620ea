"""Kernel dispatch: compiled ``_core`` when importable, numpy fallback otherwise.

Set ``HANKELRECON_PURE_PYTHON=1`` before import to force the fallback.
"""

import os

from hankelrecon import _fallback

if os.environ.get("HANKELRECON_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from hankelrecon import _core as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "cython" if _impl is not _fallback else "python"

hankel_matrix = _impl.hankel_matrix
hankel_times = _impl.hankel_times
hankel_h_times = _impl.hankel_h_times
antidiag_mean = _impl.antidiag_mean
lowrank_antidiag_mean = _impl.lowrank_antidiag_mean

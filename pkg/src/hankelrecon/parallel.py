"""Order-preserving parallel map with single-threaded BLAS in every worker."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

from threadpoolctl import threadpool_limits

THREADS_ENV = "HANKELRECON_THREADS"


def default_threads() -> int:
    """Worker count from the environment (``HANKELRECON_THREADS``), else 1."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1")
    return n


def _init_worker():
    # keep BLAS single-threaded so results do not depend on the worker count
    threadpool_limits(1)


def _call(args):
    func, item = args
    with threadpool_limits(1):
        return func(item)


def ordered_map(func, items, workers: int = 1) -> list:
    """``[func(i) for i in items]``, optionally spread over processes.

    Results come back in input order and BLAS is pinned to one thread in
    both paths, so the output is bit-identical for any ``workers``.
    ``func`` must be picklable when ``workers > 1``.
    """
    items = list(items)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    if workers == 1 or len(items) <= 1:
        with threadpool_limits(1):
            return [func(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items)), initializer=_init_worker) as pool:
        return list(pool.map(_call, [(func, i) for i in items]))

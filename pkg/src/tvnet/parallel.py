"""Bounded thread-pool mapping with deterministic result order.

Estimation tasks are pure functions of their inputs, so results are
collected by task index and outputs do not depend on the worker count. The
``TVNET_THREADS`` environment variable supplies the default pool size.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("TVNET_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int | None = None) -> list:
    """Apply ``fn`` over ``items``; results keep the input order."""
    items = list(items)
    n_workers = min(resolve_threads(threads), max(1, len(items)))
    if n_workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(fn, items))

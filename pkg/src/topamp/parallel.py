"""Process-pool map honouring the ``TOPAMP_THREADS`` environment variable."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get("TOPAMP_THREADS")
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def parallel_map(fn: Callable, tasks: Iterable, workers: int | None = None) -> list:
    """``[fn(t) for t in tasks]``, spread over processes when more than one worker is allowed.

    Results keep task order, so output is identical for any worker count.
    """
    tasks = list(tasks)
    n = worker_count(workers)
    if n == 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * n))
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))

"""
Thread pool helpers for per-sample work.

Results always come back in input order so that reductions over them are
deterministic regardless of the worker count.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from .config import _positive_int_from_env

T = TypeVar("T")
R = TypeVar("R")


def thread_count(limit: Optional[int] = None) -> int:
    """
    Number of worker threads to use.

    Args:
        limit: Optional upper bound (e.g. the number of work items)

    Returns:
        ``POSECAST_THREADS`` if set, otherwise the CPU count, capped by ``limit``
    """
    threads = _positive_int_from_env("POSECAST_THREADS") or os.cpu_count() or 1
    if limit is not None:
        threads = min(threads, max(1, limit))
    return threads


def ordered_map(fn: Callable[[T], R], items: Sequence[T]) -> List[R]:
    """
    Apply ``fn`` to every item, possibly in parallel.

    Args:
        fn: Pure function of one item
        items: Work items

    Returns:
        List of results, same order as ``items``
    """
    if not items:
        return []

    max_workers = thread_count(len(items))
    if max_workers == 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=max_workers) as executor:
        return list(executor.map(fn, items))

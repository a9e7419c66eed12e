"""Process-parallel map for independent work items.

Workers are forked, so ``fn`` may be a closure over large unpicklable state;
only the items and results cross the process boundary.
"""

from __future__ import annotations

import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_TASK: Callable | None = None


def _call(item):
    return _TASK(item)


def fork_map(fn: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, in order, over ``jobs`` forked workers."""
    global _TASK
    items = list(items)
    if jobs <= 1 or len(items) <= 1 or "fork" not in mp.get_all_start_methods():
        return [fn(x) for x in items]
    _TASK = fn
    try:
        with ProcessPoolExecutor(min(jobs, len(items)), mp_context=mp.get_context("fork")) as pool:
            return list(pool.map(_call, items))
    finally:
        _TASK = None

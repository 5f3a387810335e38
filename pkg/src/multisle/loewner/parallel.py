"""Batch-parallel execution of Monte Carlo work.

Each batch owns an independent random stream addressed by its index, so the
combined result depends only on the master seed and the batch layout and is
the same for any number of worker processes.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

__all__ = ["map_batches"]


def map_batches(fn: Callable[[T], R], tasks: Sequence[T], jobs: int = 1) -> list[R]:
    """Apply ``fn`` to every task, in order, on up to ``jobs`` processes.

    ``fn`` and the tasks must be picklable when ``jobs > 1``.
    """
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as ex:
        return list(ex.map(fn, tasks))

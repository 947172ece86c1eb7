"""Deterministic instance-level parallelism.

Every ensemble member derives its random stream from ``(master_seed, index)``
and results are reduced in index order, so outputs do not depend on how many
workers evaluated them.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

WORKERS_ENV = "FLOQUET_VQE_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    """Worker count from ``$FLOQUET_VQE_WORKERS``, else the number of CPUs."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def instance_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(index)])


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally spread over processes."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))

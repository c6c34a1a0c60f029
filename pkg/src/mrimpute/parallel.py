"""Order-preserving process-pool map used by the Monte Carlo and bootstrap drivers."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable

import numpy as np


def parallel_map(fn: Callable, jobs: Iterable, workers: int) -> list:
    """Apply ``fn`` to each job, in-process when ``workers == 1``."""
    jobs = list(jobs)
    if workers == 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def split_range(total: int, workers: int) -> list[range]:
    """Contiguous index ranges; several per worker to even out load."""
    parts = 1 if workers == 1 else 4 * workers
    bounds = np.linspace(0, total, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

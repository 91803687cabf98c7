"""Worker-pool plumbing shared by the hierarchy driver."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker cap from PATS_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("PATS_THREADS", "").strip()
    if raw in ("", "0"):
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        return os.cpu_count() or 1
    return max(1, n)


def parallel_map(fn: Callable[[T], R], items: Sequence[T]) -> list[R]:
    """Map preserving input order; uses a thread pool unless capped to 1.

    Results are gathered by input index, so output is identical regardless
    of execution interleaving.
    """
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

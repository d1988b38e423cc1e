"""Order-preserving thread pool capped by the BELLSCOPE_THREADS variable."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count() -> int:
    raw = os.environ.get("BELLSCOPE_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        cap = 0
    if cap < 1:
        cap = os.cpu_count() or 1
    return max(1, cap)


def parallel_map(fn, items):
    """``list(map(fn, items))`` on a thread pool; results keep input order."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunks(seq, size: int):
    seq = list(seq)
    return [seq[i : i + size] for i in range(0, len(seq), size)]

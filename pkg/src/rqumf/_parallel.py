"""Optional thread parallelism, capped by the RQUMF_THREADS environment
variable (default 1 = sequential).

Work items must be independent and carry their own seeds; callers collect
results in submission order, so outputs never depend on the thread count.
The compiled solver kernels release the GIL, so threads give real speedup.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

__all__ = ["thread_count", "parallel_map"]


def thread_count() -> int:
    raw = os.environ.get("RQUMF_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items: list) -> list:
    if thread_count() <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        return list(pool.map(fn, items))

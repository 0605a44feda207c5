"""Thread-count policy (MORSE_CAUSAL_THREADS caps parallelism, 0 = auto)."""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "MORSE_CAUSAL_THREADS"


def worker_count() -> int:
    raw = os.environ.get(ENV_VAR, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = min(8, os.cpu_count() or 1)
    return max(1, n)


def ordered_map(fn, items):
    """map() over a thread pool; results keep input order (deterministic)."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))

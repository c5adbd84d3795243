import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ValidationError


def thread_count() -> int:
    """Worker cap from ``ECF_THREADS`` (default 1)."""
    raw = os.environ.get("ECF_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"ECF_THREADS must be an integer >= 1, got {raw!r}") from None
    if value < 1:
        raise ValidationError(f"ECF_THREADS must be an integer >= 1, got {raw!r}")
    return value


def ordered_map(fn, items, parallel: bool = True) -> list:
    """``list(map(fn, items))``, spread over threads when allowed; order is kept."""
    items = list(items)
    workers = thread_count() if parallel else 1
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

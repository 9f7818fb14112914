"""Thread-pool fan-out capped by IDEWAVE_THREADS."""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from django.conf import settings

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')


def thread_count(requested: Optional[int] = None) -> int:
    limit = max(1, int(settings.IDEWAVE_THREADS))
    return limit if requested is None else max(1, min(int(requested), limit))


def thread_map(fn: Callable[[T], R], items: Iterable[T],
               threads: Optional[int] = None) -> List[R]:
    """
    map(fn, items) over a thread pool; results keep the input order.

    Runs inline when only one thread is allowed, so the result never
    depends on the pool size.
    """
    items = list(items)
    workers = min(thread_count(threads), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    logger.debug("Fanning %d tasks out over %d threads", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))

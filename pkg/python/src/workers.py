from typing import Callable, List, Optional, Sequence, TypeVar
import logging

try:
    from .config import QFLOW_THREADS
except ImportError:
    from src.config import QFLOW_THREADS

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(fn: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None) -> List[R]:
    """Apply fn to every item on a thread pool and return results in input order.

    Completion order never leaks into the result, so callers can reduce
    over it sequentially and get the same floats as a serial loop.

    Args:
        fn: Pure function of one item
        items: Work items
        max_workers: Worker cap (defaults to QFLOW_THREADS, then the executor default)

    Returns:
        List of fn(item) in the order of items
    """
    if not items:
        return []

    workers = max_workers or QFLOW_THREADS
    if workers == 1 or len(items) == 1:
        return [fn(item) for item in items]

    from concurrent.futures import ThreadPoolExecutor, as_completed

    results = []
    with ThreadPoolExecutor(max_workers=workers) as ex:
        futs = {ex.submit(fn, item): i for i, item in enumerate(items)}
        for fut in as_completed(futs):
            idx = futs[fut]
            try:
                results.append((idx, fut.result()))
            except Exception as e:
                logger.error(f"Work item {idx} failed: {e}")
                raise

    # Sort by original order
    results.sort(key=lambda x: x[0])
    logger.debug(f"parallel_map finished {len(results)} items on {workers or 'default'} workers")
    return [r for _, r in results]

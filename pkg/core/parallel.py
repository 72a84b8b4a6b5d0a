"""
Ordered fan-out of independent Monte Carlo work units.

Results come back in task order whatever the worker count, so reductions
over them are deterministic.
"""

import logging
import multiprocessing as mp

from .conf import lab_settings

logger = logging.getLogger(__name__)


def resolve_workers(workers=None):
    workers = lab_settings.WORKERS if workers is None else workers
    return max(1, int(workers))


def map_ordered(fn, tasks, workers=None):
    tasks = list(tasks)
    workers = min(resolve_workers(workers), max(1, len(tasks)))
    if workers == 1:
        return [fn(task) for task in tasks]

    logger.debug('Dispatching %d tasks to %d workers', len(tasks), workers)
    with mp.Pool(workers) as pool:
        return list(pool.imap(fn, tasks))


def chunk_ranges(total, chunks):
    """Split range(total) into at most ``chunks`` contiguous (start, stop) pairs."""
    chunks = max(1, min(chunks, total))
    bounds = [total * i // chunks for i in range(chunks + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(chunks) if bounds[i] < bounds[i + 1]]

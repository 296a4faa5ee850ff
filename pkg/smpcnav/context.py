# -*- coding: utf-8 -*-
"""Process pool and platform helpers."""

import logging
import resource
import sys

from loky import get_reusable_executor


logger = logging.getLogger(__name__)

# ru_maxrss is in bytes on macOS, kilobytes elsewhere
_RUSAGE_BYTES = 1 if sys.platform == 'darwin' else 1024


def parallel_map(func, args, num_proc, chunksize=None):
    """Apply ``func`` to every task, in worker processes when num_proc > 1.

    Results come back in the order of ``args`` whatever the number of
    processes. ``func`` must be a module-level function so that workers
    can import it.

    >>> parallel_map(abs, [-1, 2, -3], 1)
    [1, 2, 3]
    """
    args = list(args)
    num_proc = max(1, min(num_proc, len(args)))
    if num_proc == 1:
        return [func(a) for a in args]
    if chunksize is None:
        chunksize = max(1, len(args) // (4 * num_proc))
    logger.debug('Running {} tasks on {} processes'.format(len(args),
                                                          num_proc))
    executor = get_reusable_executor(max_workers=num_proc, timeout=None)
    return list(executor.map(func, args, chunksize=chunksize))


def peak_memory_mb():
    """Peak resident memory of this process [MB]."""
    usage = resource.getrusage(resource.RUSAGE_SELF)
    return usage.ru_maxrss * _RUSAGE_BYTES / 1e6

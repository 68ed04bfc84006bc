"""
Deterministic fan-out of randomized trials.
"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


def spawn_generators(seed, count):
    """
    Independent per-trial generators derived from one master seed.
    Trial i always receives the same stream, whatever the thread count.
    """
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.default_rng(child) for child in children]


def parallel_map(func, items, threads=1):
    """Order-preserving map, optionally on a thread pool."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    logger.debug(f"Mapping {len(items)} items on {threads} threads")
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def run_trials(func, seed, count, threads=1):
    """
    Run ``func(rng)`` for ``count`` trials and return the results in trial order.
    """
    return parallel_map(func, spawn_generators(seed, count), threads)

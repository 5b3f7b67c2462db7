"""Partition-independent random streams.

Every block of random numbers is drawn from its own generator keyed by
``(seed, *key)`` through :class:`numpy.random.SeedSequence`. Work can be split
across any number of threads without changing a single drawn value, as long
as the block layout (``CHUNK``) is fixed.
"""
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 8192


def generator(seed, *key):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def chunk_bounds(n, chunk=CHUNK):
    return [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]


def map_chunks(fn, n, threads=1, chunk=CHUNK):
    """Call ``fn(index, lo, hi)`` for every chunk and return results in order."""
    bounds = chunk_bounds(n, chunk)
    if threads <= 1 or len(bounds) == 1:
        return [fn(i, lo, hi) for i, (lo, hi) in enumerate(bounds)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = [ex.submit(fn, i, lo, hi) for i, (lo, hi) in enumerate(bounds)]
        return [f.result() for f in futures]

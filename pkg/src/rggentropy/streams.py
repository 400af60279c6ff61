"""Counter-based random streams and deterministic block-parallel execution.

Work of size L is cut into fixed-size blocks whose boundaries depend only on
L and the block size.  Block b draws from a Philox generator keyed by
(seed, *key, b), so the numbers a block sees never depend on which thread runs
it or in what order.  Results are reduced in block order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

THREADS_ENV = "RGG_THREADS"


def generator(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A child seed for an independent sub-computation (e.g. one grid point)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def thread_count(requested: int | None = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested if requested else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, int(n))


def blocks(total: int, block_size: int) -> list[tuple[int, int]]:
    """(block index, size) pairs covering ``total`` items."""
    if total < 0:
        raise ValueError("total must be non-negative")
    out = []
    start, b = 0, 0
    while start < total:
        size = min(block_size, total - start)
        out.append((b, size))
        start += size
        b += 1
    return out


def map_blocks(fn: Callable[[int, int], T], total: int, block_size: int,
               threads: int | None = None) -> list[T]:
    """Run fn(block_index, size) over all blocks; results in block order."""
    work = blocks(total, block_size)
    n = thread_count(threads)
    if n == 1 or len(work) <= 1:
        return [fn(b, s) for b, s in work]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda bs: fn(*bs), work))


def ordered_sum(parts: Sequence[np.ndarray], like: np.ndarray) -> np.ndarray:
    acc = like.copy()
    for p in parts:
        acc += p
    return acc

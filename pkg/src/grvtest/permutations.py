"""Seeded, schedule-independent permutation streams.

Permutation number ``k`` of a stream always lives in block ``k // BLOCK_SIZE``
and every block draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=(stream, block))``. Any assignment of blocks to
workers therefore sees exactly the same permutations.
"""

from __future__ import annotations

import hashlib
import itertools
import threading
from collections.abc import Callable, Iterator
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "BLOCK_SIZE",
    "stream_id",
    "block_generator",
    "permutation_block",
    "iter_blocks",
    "count_at_least",
    "count_at_most",
    "all_permutations",
    "permutations_drawn",
    "reset_permutation_counter",
]

BLOCK_SIZE = 1024
_MASK64 = (1 << 64) - 1

_counter_lock = threading.Lock()
_counter = 0


def permutations_drawn() -> int:
    """Total permutations generated by this process since the last reset."""
    return _counter


def reset_permutation_counter() -> None:
    global _counter
    with _counter_lock:
        _counter = 0


def _count(k: int) -> None:
    global _counter
    with _counter_lock:
        _counter += k


def stream_id(*parts: object) -> int:
    """Stable 64-bit stream identifier from arbitrary labels (e.g. a test id)."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=(int(stream) & _MASK64, int(block)))
    return np.random.Generator(np.random.PCG64(ss))


def permutation_block(n: int, seed: int, stream: int, block: int, size: int) -> NDArray[np.intp]:
    rng = block_generator(seed, stream, block)
    base = np.tile(np.arange(n, dtype=np.intp), (size, 1))
    _count(size)
    return rng.permuted(base, axis=1)


def iter_blocks(n_perm: int) -> Iterator[tuple[int, int]]:
    """(block index, block size) pairs covering ``n_perm`` permutations."""
    for b in range((n_perm + BLOCK_SIZE - 1) // BLOCK_SIZE):
        yield b, min(BLOCK_SIZE, n_perm - b * BLOCK_SIZE)


def _run(
    n: int,
    n_perm: int,
    seed: int,
    stream: int,
    workers: int,
    job: Callable[[NDArray[np.intp]], int],
) -> int:
    def one(item: tuple[int, int]) -> int:
        b, size = item
        return job(permutation_block(n, seed, stream, b, size))

    blocks = list(iter_blocks(n_perm))
    if workers <= 1 or len(blocks) == 1:
        return sum(map(one, blocks))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(one, blocks))


def count_at_least(
    stat: Callable[[NDArray[np.intp]], NDArray[np.float64]],
    observed: float,
    tol: float,
    n: int,
    n_perm: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> int:
    """Number of random permutations whose statistic is >= observed - tol."""
    return _run(n, n_perm, seed, stream, workers,
                lambda perms: int(np.count_nonzero(stat(perms) >= observed - tol)))


def count_at_most(
    stat: Callable[[NDArray[np.intp]], NDArray[np.float64]],
    observed: float,
    tol: float,
    n: int,
    n_perm: int,
    seed: int,
    stream: int = 0,
    workers: int = 1,
) -> int:
    """Number of random permutations whose statistic is <= observed + tol."""
    return _run(n, n_perm, seed, stream, workers,
                lambda perms: int(np.count_nonzero(stat(perms) <= observed + tol)))


def all_permutations(n: int, chunk: int = 40320) -> Iterator[NDArray[np.intp]]:
    """Every permutation of range(n) in lexicographic order, in chunks."""
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        _count(len(block))
        yield np.array(block, dtype=np.intp)

"""Exact moments of the quadratic assignment statistic via set-partition sums.

For T(pi) = sum_ij a[i,j] b[pi(i), pi(j)] with pi uniform over all N!
permutations,

    E[T^k] = sum_s  A!=(s) B!=(s) / (N)_|s|

where s runs over set partitions of the 2k index positions (i1, j1, ..., ik, jk),
A!=(s) sums prod a[i_l, j_l] over index tuples whose equality pattern is exactly
s, and (N)_m is the falling factorial. A!= is recovered from the unrestricted
sums A=(t) (plain tensor contractions) by Moebius inversion on the partition
lattice: A!=(s) = sum_{t >= s} mu(s, t) A=(t).
"""

from __future__ import annotations

import itertools
import math
import string
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray


def set_partitions(n: int) -> list[tuple[int, ...]]:
    """All set partitions of range(n) as restricted growth strings."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], top: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for b in range(top + 2):
            prefix.append(b)
            rec(prefix, max(top, b))
            prefix.pop()

    if n == 0:
        return [()]
    rec([0], 0)
    return out


def _canonical(labels: tuple[int, ...]) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def _graph_key(labels: tuple[int, ...]) -> tuple[tuple[int, int], ...]:
    """Isomorphism-invariant key of the index multigraph (edges are unordered)."""
    m = max(labels) + 1
    edges = [(labels[2 * l], labels[2 * l + 1]) for l in range(len(labels) // 2)]
    best = None
    for relabel in itertools.permutations(range(m)):
        key = tuple(sorted(tuple(sorted((relabel[u], relabel[v]))) for u, v in edges))
        if best is None or key < best:
            best = key
    return best


@lru_cache(maxsize=None)
def _lattice(k: int) -> tuple[list[tuple[int, ...]], NDArray[np.float64], NDArray[np.int64]]:
    """Partitions of 2k positions, Moebius matrix and block counts."""
    parts = set_partitions(2 * k)
    index = {p: i for i, p in enumerate(parts)}
    mobius = np.zeros((len(parts), len(parts)))
    for i, s in enumerate(parts):
        m = max(s) + 1
        for merge in set_partitions(m):
            t = _canonical(tuple(merge[b] for b in s))
            coef = 1
            for c in np.bincount(merge):
                coef *= (-1) ** (int(c) - 1) * math.factorial(int(c) - 1)
            mobius[i, index[t]] += coef
    blocks = np.array([max(p) + 1 for p in parts], dtype=np.int64)
    return parts, mobius, blocks


@lru_cache(maxsize=None)
def _classes(k: int) -> tuple[NDArray[np.intp], list[int]]:
    """Class index of every partition and one representative per class.

    a is symmetric, so isomorphic index graphs give identical plain sums.
    """
    parts, _, _ = _lattice(k)
    seen: dict[tuple, int] = {}
    reps: list[int] = []
    classes = np.empty(len(parts), dtype=np.intp)
    for i, p in enumerate(parts):
        key = _graph_key(p)
        if key not in seen:
            seen[key] = len(reps)
            reps.append(i)
        classes[i] = seen[key]
    return classes, reps


def _contract(a: NDArray[np.float64], labels: tuple[int, ...]) -> float:
    """Unrestricted index sum of prod a[i_l, j_l] with indices tied by ``labels``.

    Indices are summed out one at a time, always picking the index with the
    fewest neighbours. With at most three factors this keeps every step at
    O(N^2) except closed triangles, which cost one matrix product.
    """
    letters = string.ascii_lowercase
    factors: list[tuple[str, NDArray[np.float64]]] = [
        (letters[labels[2 * l]] + letters[labels[2 * l + 1]], a) for l in range(len(labels) // 2)
    ]
    scalar = 1.0
    remaining = {letters[x] for x in labels}
    while remaining:
        def cost(v: str) -> tuple[int, int]:
            touching = [f for f, _ in factors if v in f]
            return len(set("".join(touching)) - {v}), len(touching)

        v = min(sorted(remaining), key=cost)
        remaining.discard(v)
        group = [(f, t) for f, t in factors if v in f]
        factors = [(f, t) for f, t in factors if v not in f]
        out = "".join(sorted(set("".join(f for f, _ in group)) - {v}))
        spec = ",".join(f for f, _ in group) + "->" + out
        value = np.einsum(spec, *(t for _, t in group), optimize=len(group) > 1)
        if out:
            factors.append((out, value))
        else:
            scalar *= float(value)
    for f, t in factors:  # only reachable for factors with no free index
        scalar *= float(t)
    return scalar


def distinct_sums(a: NDArray[np.float64], k: int) -> NDArray[np.float64]:
    """A!=(s) for every partition s of 2k positions."""
    parts, mobius, _ = _lattice(k)
    classes, reps = _classes(k)
    values = np.array([_contract(a, parts[r]) for r in reps])
    return mobius @ values[classes]


def falling_factorial(n: int, m: int) -> float:
    out = 1.0
    for r in range(m):
        out *= n - r
    return out


def raw_moment(a: NDArray[np.float64], b: NDArray[np.float64], k: int) -> float:
    """E[T^k] over uniformly random simultaneous permutations of ``b``."""
    n = a.shape[0]
    _, _, blocks = _lattice(k)
    da, db = distinct_sums(a, k), distinct_sums(b, k)
    total = 0.0
    for s in range(len(blocks)):
        m = int(blocks[s])
        if m > n:
            continue  # no injective assignment exists; both sums vanish
        total += da[s] * db[s] / falling_factorial(n, m)
    return total

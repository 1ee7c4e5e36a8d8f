"""Combining p-values across distance pairs and comparing ranked lists."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import false_discovery_control

from . import permutations as perm
from .errors import DimensionError, ValidationError

__all__ = [
    "PValueMatrix",
    "RankedList",
    "combine_maxp",
    "rank_by_combined",
    "canberra_topk",
    "canberra_raw",
    "expected_canberra",
    "rank_overlap_pvalue",
    "canberra_sweep",
    "benjamini_hochberg",
    "read_pvalue_matrix",
    "read_ranked_list",
    "write_ranked_list",
]


@dataclass(frozen=True, eq=False)
class PValueMatrix:
    units: tuple[str, ...]
    values: NDArray[np.float64]
    columns: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != len(self.units) or v.shape[1] < 1:
            raise DimensionError(f"p-value matrix shape {v.shape} does not match {len(self.units)} units")
        if np.any(~np.isfinite(v)) or np.any((v < 0) | (v > 1)):
            raise ValidationError("p-values must lie in [0, 1]")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "units", tuple(str(u) for u in self.units))

    @property
    def k(self) -> int:
        return self.values.shape[1]

    def combined(self) -> NDArray[np.float64]:
        return np.array([combine_maxp(row) for row in self.values])


@dataclass(frozen=True)
class RankedList:
    """Unit ids ordered from most to least significant (rank 1 first)."""

    ids: tuple[str, ...]

    def __post_init__(self) -> None:
        ids = tuple(str(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            raise ValidationError("ranked list contains duplicate ids")
        object.__setattr__(self, "ids", ids)

    def __len__(self) -> int:
        return len(self.ids)

    def ranks(self) -> dict[str, int]:
        return {u: r for r, u in enumerate(self.ids, start=1)}


def combine_maxp(pvalues: ArrayLike) -> float:
    """maxP combination: (max p)^k, the null CDF of the largest of k uniforms."""
    p = np.asarray(pvalues, dtype=float).ravel()
    if p.size == 0:
        raise ValidationError("combine_maxp needs at least one p-value")
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValidationError("p-values must lie in [0, 1]")
    return float(p.max() ** p.size)


def rank_by_combined(units: Sequence[str], combined: ArrayLike) -> RankedList:
    """Order units by combined p ascending; ties broken by unit id."""
    c = np.asarray(combined, dtype=float)
    order = sorted(range(len(units)), key=lambda i: (c[i], str(units[i])))
    return RankedList(tuple(str(units[i]) for i in order))


def _rank_vectors(a: RankedList, b: RankedList) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    if set(a.ids) != set(b.ids):
        raise ValidationError("ranked lists are over different id universes")
    rb = b.ranks()
    ra = np.arange(1, len(a) + 1, dtype=float)
    return ra, np.array([rb[u] for u in a.ids], dtype=float)


def _check_k(k: int, size: int) -> None:
    if not 1 <= k <= size:
        raise ValidationError(f"k must lie in [1, {size}], got {k}")


def canberra_raw(ra: NDArray[np.float64], rb: NDArray[np.float64], k: int) -> NDArray[np.float64] | float:
    """Top-k Canberra distance on rank vectors; ranks beyond k are set to k + 1.

    ``rb`` may be 2-D (one permuted rank vector per row).
    """
    ta = np.minimum(ra, k + 1)
    tb = np.minimum(rb, k + 1)
    return np.sum(np.abs(ta - tb) / (ta + tb), axis=-1)


@lru_cache(maxsize=4096)
def expected_canberra(size: int, k: int) -> float:
    """Exact mean top-k Canberra distance between a fixed and a uniformly random ranking.

    Each item's rank in the random list is uniform on 1..size, so after
    truncation the truncated value k + 1 occurs with multiplicity size - k.
    """
    _check_k(k, size)
    u = np.arange(1, k + 2, dtype=float)
    mult = np.ones(k + 1)
    mult[-1] = size - k
    f = np.abs(u[:, None] - u[None, :]) / (u[:, None] + u[None, :])
    return float(mult @ f @ mult / size)


def canberra_topk(list_a: RankedList, list_b: RankedList, k: int) -> float:
    """Top-k Canberra distance normalised by its expectation under random ranking.

    0 for identical rankings; about 1 when ``list_b`` is unrelated to ``list_a``.
    """
    _check_k(k, len(list_a))
    ra, rb = _rank_vectors(list_a, list_b)
    exp = expected_canberra(len(list_a), k)
    if exp == 0:  # size == k == 1
        return 0.0
    return float(canberra_raw(ra, rb, k)) / exp


def rank_overlap_pvalue(
    list_a: RankedList,
    list_b: RankedList,
    k: int,
    n_perm: int,
    seed: int,
    *,
    stream: int = 0,
    workers: int = 1,
) -> float:
    """Left-tailed p: (1 + #{perm: distance <= observed}) / (n_perm + 1).

    Each permutation reshuffles the ranks of the second list.
    """
    return float(canberra_sweep(list_a, list_b, [k], n_perm, seed, stream=stream, workers=workers)[0][1])


def canberra_sweep(
    list_a: RankedList,
    list_b: RankedList,
    ks: Sequence[int],
    n_perm: int,
    seed: int,
    *,
    stream: int = 0,
    workers: int = 1,
) -> list[tuple[float, float]]:
    """(normalised distance, permutation p) for every k; one shared permutation set."""
    if n_perm < 1:
        raise ValidationError("n_perm must be at least 1")
    size = len(list_a)
    for k in ks:
        _check_k(k, size)
    ra, rb = _rank_vectors(list_a, list_b)
    observed = [float(canberra_raw(ra, rb, k)) for k in ks]
    counts = np.zeros(len(ks), dtype=np.int64)
    tol = 1e-12 * max(1.0, size)

    def job(perms: NDArray[np.intp]) -> NDArray[np.int64]:
        # Same arithmetic as canberra_raw, with reused buffers: a full sweep
        # over hundreds of k values is otherwise dominated by allocation.
        permuted = rb[perms]
        tb = np.empty_like(permuted)
        den = np.empty_like(permuted)
        out = np.empty(len(ks), dtype=np.int64)
        for i, (k, obs) in enumerate(zip(ks, observed)):
            ta = np.minimum(ra, k + 1)
            np.minimum(permuted, k + 1, out=tb)
            np.add(tb, ta, out=den)
            np.subtract(tb, ta, out=tb)
            np.abs(tb, out=tb)
            np.divide(tb, den, out=tb)
            out[i] = np.count_nonzero(tb.sum(axis=1) <= obs + tol)
        return out

    blocks = list(perm.iter_blocks(n_perm))

    def one(item: tuple[int, int]) -> NDArray[np.int64]:
        b, m = item
        return job(perm.permutation_block(size, seed, stream, b, m))

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, blocks))
    else:
        parts = [one(item) for item in blocks]
    for part in parts:
        counts += part
    out = []
    for k, obs, c in zip(ks, observed, counts):
        exp = expected_canberra(size, k)
        out.append((obs / exp if exp else 0.0, (1 + int(c)) / (n_perm + 1)))
    return out


def benjamini_hochberg(pvalues: ArrayLike) -> NDArray[np.float64]:
    """Step-up BH adjusted p-values (q-values)."""
    p = np.asarray(pvalues, dtype=float)
    if p.size == 0:
        return p
    return false_discovery_control(p, method="bh")


# ---------------------------------------------------------------------------
# files


def read_pvalue_matrix(path: str | os.PathLike) -> PValueMatrix:
    """CSV: unit id in the first column, one column per distance pair, header row required."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if len(rows) < 2:
        raise ValidationError(f"{path}: need a header and at least one row")
    header = rows[0]
    units = [r[0] for r in rows[1:]]
    try:
        values = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric p-value ({exc})") from exc
    return PValueMatrix(tuple(units), values, tuple(header[1:]))


def read_ranked_list(path: str | os.PathLike) -> RankedList:
    with open(path) as fh:
        ids = [line.strip() for line in fh if line.strip()]
    return RankedList(tuple(ids))


def write_ranked_list(path: str | os.PathLike, ranked: RankedList) -> None:
    with open(path, "w") as fh:
        fh.write("\n".join(ranked.ids) + "\n")

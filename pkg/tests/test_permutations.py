import math

import numpy as np
import pytest

from grvtest import permutations as perm
from grvtest._partitions import falling_factorial, raw_moment, set_partitions


def test_blocks_cover_request():
    blocks = list(perm.iter_blocks(2500))
    assert [s for _, s in blocks] == [1024, 1024, 452]
    assert list(perm.iter_blocks(1)) == [(0, 1)]


def test_blocks_are_valid_permutations():
    p = perm.permutation_block(9, seed=3, stream=0, block=0, size=500)
    np.testing.assert_array_equal(np.sort(p, axis=1), np.tile(np.arange(9), (500, 1)))


def test_block_depends_only_on_seed_stream_index():
    a = perm.permutation_block(20, 7, 5, 2, 100)
    b = perm.permutation_block(20, 7, 5, 2, 100)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, perm.permutation_block(20, 7, 6, 2, 100))
    assert not np.array_equal(a, perm.permutation_block(20, 8, 5, 2, 100))


def test_counts_independent_of_workers():
    w = np.random.default_rng(0).normal(size=12)

    def stat(perms):
        return perms @ w

    obs = float(np.arange(12) @ w)
    counts = {k: perm.count_at_least(stat, obs, 0.0, 12, 5000, seed=11, workers=k) for k in (1, 2, 4, 16)}
    assert len(set(counts.values())) == 1
    below = perm.count_at_most(stat, obs, 0.0, 12, 5000, seed=11, workers=3)
    assert below + counts[1] >= 5000


def test_counter_tracks_draws():
    perm.reset_permutation_counter()
    perm.permutation_block(5, 1, 0, 0, 37)
    list(perm.all_permutations(4))
    assert perm.permutations_drawn() == 37 + 24


def test_all_permutations_complete():
    rows = np.concatenate(list(perm.all_permutations(5, chunk=7)))
    assert len(rows) == 120 and len({tuple(r) for r in rows}) == 120


def test_stream_id_stable():
    assert perm.stream_id("grv", 1, 2) == perm.stream_id("grv", 1, 2)
    assert perm.stream_id("grv", 1, 2) != perm.stream_id("grv", 2, 1)
    assert 0 <= perm.stream_id("x") < 2**64


@pytest.mark.parametrize("n,bell", [(1, 1), (2, 2), (3, 5), (4, 15), (6, 203)])
def test_set_partition_counts(n, bell):
    assert len(set_partitions(n)) == bell


def test_falling_factorial():
    assert falling_factorial(7, 3) == 210
    assert falling_factorial(3, 4) == 0


def test_raw_moment_first_order(rng):
    # E[sum a_ij b_pi(i)pi(j)] by brute force over a small N.
    import itertools

    n = 5
    a, b = rng.normal(size=(n, n)), rng.normal(size=(n, n))
    a, b = a + a.T, b + b.T
    vals = [np.sum(a * b[np.ix_(p, p)]) for p in map(list, itertools.permutations(range(n)))]
    for k in (1, 2, 3):
        want = np.mean(np.array(vals) ** k)
        assert raw_moment(a, b, k) == pytest.approx(want, rel=1e-11)
    assert math.factorial(n) == len(vals)

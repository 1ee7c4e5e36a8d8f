import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from grvtest.errors import ValidationError
from grvtest.meta import (
    PValueMatrix,
    RankedList,
    benjamini_hochberg,
    canberra_raw,
    canberra_sweep,
    canberra_topk,
    combine_maxp,
    expected_canberra,
    rank_by_combined,
    rank_overlap_pvalue,
    read_pvalue_matrix,
    read_ranked_list,
    write_ranked_list,
)


def _ids(n):
    return tuple(f"u{i:03d}" for i in range(n))


def test_maxp_examples():
    assert combine_maxp([1.0, 1.0, 1.0]) == 1.0
    assert combine_maxp([0.37]) == 0.37
    assert combine_maxp([0.5, 0.2]) == pytest.approx(0.25)
    with pytest.raises(ValidationError):
        combine_maxp([])
    with pytest.raises(ValidationError):
        combine_maxp([0.2, 1.3])


def test_maxp_simulation_cross_check():
    u = np.random.default_rng(0).uniform(size=(200_000, 2))
    assert np.mean(u.max(axis=1) <= 0.5) == pytest.approx(combine_maxp([0.5, 0.2]), abs=0.005)


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.data())
def test_maxp_monotone(p, data):
    i = data.draw(st.integers(0, len(p) - 1))
    bumped = list(p)
    bumped[i] = data.draw(st.floats(p[i], 1))
    assert combine_maxp(bumped) >= combine_maxp(p)


def test_pvalue_matrix_combined():
    m = PValueMatrix(("a", "b"), np.array([[0.1, 0.2], [0.5, 0.9]]))
    assert m.k == 2
    np.testing.assert_allclose(m.combined(), [0.04, 0.81])
    with pytest.raises(ValidationError):
        PValueMatrix(("a",), np.array([[1.5]]))


def test_rank_by_combined_ties_deterministic():
    r = rank_by_combined(["c", "a", "b"], [0.2, 0.2, 0.1])
    assert r.ids == ("b", "a", "c")


def test_ranked_list_rejects_duplicates():
    with pytest.raises(ValidationError):
        RankedList(("a", "b", "a"))


def test_canberra_identical_and_symmetric(rng):
    ids = _ids(30)
    a = RankedList(ids)
    b = RankedList(tuple(rng.permutation(ids)))
    for k in (1, 5, 30):
        assert canberra_topk(a, a, k) == 0.0
        assert canberra_topk(a, b, k) == pytest.approx(canberra_topk(b, a, k), abs=1e-12)


def test_expected_canberra_exact_small():
    # Enumerate all rankings of six items as the oracle.
    size = 6
    ra = np.arange(1, size + 1, dtype=float)
    perms = np.array(list(itertools.permutations(range(1, size + 1))), dtype=float)
    for k in range(1, size + 1):
        want = canberra_raw(ra, perms, k).mean()
        assert expected_canberra(size, k) == pytest.approx(want, rel=1e-12)


def test_random_baseline_is_one(rng):
    ids = _ids(120)
    a = RankedList(ids)
    for k in (10, 60, 120):
        vals = [canberra_topk(a, RankedList(tuple(rng.permutation(ids))), k) for _ in range(2000)]
        assert np.mean(vals) == pytest.approx(1.0, abs=0.02)


def test_reverse_list_not_below_random():
    ids = _ids(100)
    assert canberra_topk(RankedList(ids), RankedList(ids[::-1]), 100) >= 0.9


def test_universe_and_k_checks():
    a = RankedList(("a", "b", "c"))
    with pytest.raises(ValidationError):
        canberra_topk(a, RankedList(("a", "b", "d")), 2)
    with pytest.raises(ValidationError):
        canberra_topk(a, a, 4)
    with pytest.raises(ValidationError):
        canberra_topk(a, a, 0)


def test_identical_lists_significant():
    a = RankedList(_ids(100))
    p = rank_overlap_pvalue(a, a, 10, 5000, seed=1)
    assert p <= 0.001


def test_pvalue_smaller_when_lists_agree(rng):
    ids = list(_ids(80))
    a = RankedList(tuple(ids))
    close = ids[:]
    close[0], close[5] = close[5], close[0]
    far = list(rng.permutation(ids))
    p_close = rank_overlap_pvalue(a, RankedList(tuple(close)), 20, 2000, seed=3)
    p_far = rank_overlap_pvalue(a, RankedList(tuple(far)), 20, 2000, seed=3)
    assert 0 < p_close < p_far <= 1


def test_pvalue_determinism_and_workers():
    ids = _ids(60)
    a = RankedList(ids)
    b = RankedList(tuple(np.random.default_rng(4).permutation(ids)))
    ks = [1, 5, 30, 60]
    s1 = canberra_sweep(a, b, ks, 3000, seed=6)
    assert s1 == canberra_sweep(a, b, ks, 3000, seed=6, workers=4)
    assert [p for _, p in s1] == [rank_overlap_pvalue(a, b, k, 3000, seed=6) for k in ks]


def test_null_pvalues_uniform():
    rng = np.random.default_rng(12)
    ids = _ids(50)
    a = RankedList(ids)
    pv = [rank_overlap_pvalue(a, RankedList(tuple(rng.permutation(ids))), 25, 400, seed=i)
          for i in range(200)]
    assert stats.kstest(pv, "uniform").pvalue > 1e-3


def test_bh_against_manual():
    p = np.array([0.01, 0.04, 0.03, 0.2])
    m = len(p)
    order = np.argsort(p)
    adj = np.minimum.accumulate((p[order] * m / np.arange(1, m + 1))[::-1])[::-1]
    want = np.empty(m)
    want[order] = np.minimum(adj, 1)
    np.testing.assert_allclose(benjamini_hochberg(p), want)


def test_file_round_trips(tmp_path):
    r = RankedList(("x", "y", "z"))
    write_ranked_list(tmp_path / "r.txt", r)
    assert read_ranked_list(tmp_path / "r.txt") == r
    (tmp_path / "p.csv").write_text("pathway,IBS_Euc,SS_Mah\nA,0.1,0.5\nB,0.3,0.2\n")
    m = read_pvalue_matrix(tmp_path / "p.csv")
    assert m.units == ("A", "B") and m.columns == ("IBS_Euc", "SS_Mah")
    np.testing.assert_allclose(m.combined(), [0.25, 0.09])

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from grvtest import (
    BudgetError,
    DegenerateInputError,
    DimensionError,
    DistanceMatrix,
    GramMatrix,
    PearsonIIINull,
    TestResult,
    gower_center,
    grv,
    grv_null,
    grv_pvalue_analytic,
    grv_pvalue_exhaustive,
    grv_pvalue_permutation,
    mantel,
    mantel_pvalue_exhaustive,
    mantel_pvalue_permutation,
    pearson3_cdf,
    pearson3_pdf,
    pearson3_sf,
    permutation_moments_closed_form,
    permutation_moments_exhaustive,
)

from conftest import euclidean_dm, gram_of, random_gram, random_semimetric


def _enumerated_traces(gx, gy):
    """Independent oracle: plain Python loop over itertools permutations."""
    a, b = gx.values, gy.values
    out = []
    for p in itertools.permutations(range(gx.n)):
        p = list(p)
        out.append(float(np.sum(a * b[np.ix_(p, p)])))
    return np.array(out)


def _moments(t):
    mu = t.mean()
    c = t - mu
    s2 = np.mean(c * c)
    return mu, s2, np.mean(c ** 3) / s2 ** 1.5


# --- moments ------------------------------------------------------------------

@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_closed_form_matches_enumeration(n, rng):
    for indefinite in (False, True):
        gx, gy = random_gram(rng, n, indefinite=indefinite), random_gram(rng, n)
        mu, s2, g = _moments(_enumerated_traces(gx, gy))
        m = permutation_moments_closed_form(gx, gy)
        scale = gx.frobenius_norm * gy.frobenius_norm
        assert m.mu == pytest.approx(mu, abs=1e-10 * scale)
        assert m.sigma2 == pytest.approx(s2, rel=1e-10)
        assert m.gamma == pytest.approx(g, rel=1e-9, abs=1e-10)


def test_identical_grams_n6(rng):
    g = random_gram(rng, 6)
    mu, s2, sk = _moments(_enumerated_traces(g, g))
    m = permutation_moments_closed_form(g, g)
    assert (m.mu, m.sigma2, m.gamma) == pytest.approx((mu, s2, sk), rel=1e-10)


def test_exhaustive_matches_oracle(rng):
    gx, gy = random_gram(rng, 5), random_gram(rng, 5, indefinite=True)
    m = permutation_moments_exhaustive(gx, gy)
    assert (m.mu, m.sigma2, m.gamma) == pytest.approx(_moments(_enumerated_traces(gx, gy)), rel=1e-12)


def test_three_point_hand_enumeration():
    gx = gower_center(euclidean_dm(np.array([0.0, 1.0, 3.0])))
    gy = gower_center(euclidean_dm(np.array([0.0, 2.0, 2.5])))
    t = [np.sum(gx.values * gy.values[np.ix_(p, p)]) for p in itertools.permutations(range(3))]
    assert len(t) == 6
    assert permutation_moments_exhaustive(gx, gy).mu == pytest.approx(sum(t) / 6, rel=1e-14)


def test_equidistant_simplex_is_degenerate():
    d = DistanceMatrix(np.ones((5, 5)) - np.eye(5))
    g = gower_center(d)
    assert permutation_moments_closed_form(g, g).degenerate
    assert permutation_moments_exhaustive(g, g).degenerate
    with pytest.raises(DegenerateInputError, match="permutation test"):
        grv_pvalue_analytic(g, g)


def test_two_points_zero_variance():
    g = gower_center(DistanceMatrix([[0.0, 1.0], [1.0, 0.0]]))
    m = permutation_moments_exhaustive(g, g)
    assert m.sigma2 == 0.0 and m.degenerate


def test_closed_form_preconditions(rng):
    g2 = gower_center(DistanceMatrix([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(DimensionError):
        permutation_moments_closed_form(g2, g2)
    with pytest.raises(DegenerateInputError):
        permutation_moments_closed_form(random_gram(rng, 4), GramMatrix(np.zeros((4, 4))))
    big = random_gram(rng, 10)
    with pytest.raises(BudgetError):
        permutation_moments_exhaustive(big, big)


def test_moments_invariant_under_prepermutation(rng):
    gx, gy = random_gram(rng, 30), random_gram(rng, 30, indefinite=True)
    m1 = permutation_moments_closed_form(gx, gy)
    m2 = permutation_moments_closed_form(gx, gy.permuted(rng.permutation(30)))
    assert m2.mu == pytest.approx(m1.mu, rel=1e-12, abs=1e-12)
    assert m2.sigma2 == pytest.approx(m1.sigma2, rel=1e-12)
    assert m2.gamma == pytest.approx(m1.gamma, rel=1e-12, abs=1e-12)


def test_moments_against_monte_carlo_large_n(rng):
    gx, gy = random_gram(rng, 40), random_gram(rng, 40)
    m = permutation_moments_closed_form(gx, gy)
    t = np.array([np.sum(gx.values * gy.permuted(rng.permutation(40)).values) for _ in range(20000)])
    assert abs(t.mean() - m.mu) < 5 * m.sigma / math.sqrt(len(t))
    assert t.var() == pytest.approx(m.sigma2, rel=0.05)
    assert stats.skew(t) == pytest.approx(m.gamma, abs=0.1)


# --- Pearson type III ---------------------------------------------------------

def test_pearson3_median_at_zero_skew():
    assert pearson3_cdf(0.0, 0.0) == 0.5


@pytest.mark.parametrize("gamma", [0.2, 0.8, 1.5, -0.8])
def test_pearson3_sampling_oracle(gamma):
    rng = np.random.default_rng(11)
    a = 4.0 / gamma ** 2
    draws = (rng.gamma(a, size=1_000_000) - a) / math.sqrt(a) * math.copysign(1.0, gamma)
    grid = np.linspace(-4, 4, 401)
    emp = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
    assert np.max(np.abs(emp - pearson3_cdf(grid, gamma))) < 0.005


@pytest.mark.parametrize("gamma", [-2.0, -0.3, 0.0, 1e-5, 0.5, 3.0])
def test_pearson3_monotone_and_bounded(gamma):
    grid = np.linspace(-20, 20, 10_000)
    f = pearson3_cdf(grid, gamma)
    assert np.all(np.diff(f) >= 0)
    assert f.min() >= 0 and f.max() <= 1
    np.testing.assert_allclose(pearson3_sf(grid, gamma), 1 - f, atol=1e-12)


@pytest.mark.parametrize("gamma", [-1.2, 0.0, 0.05, 0.7, 2.5])
def test_pearson3_pdf_integrates_to_one(gamma):
    # Mass beyond 60 standard deviations is far below the tolerance.
    lo = -2.0 / gamma if gamma > 0 else -60.0
    hi = -2.0 / gamma if gamma < 0 else 60.0
    total, _ = integrate.quad(lambda t: pearson3_pdf(t, gamma), lo, hi,
                              points=[-1.0, 0.0, 1.0], epsabs=1e-12, limit=400)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("gamma", [0.4, -1.1])
def test_pearson3_pdf_is_cdf_derivative(gamma):
    t = np.linspace(-1.5, 1.5, 31)
    h = 1e-5
    num = (pearson3_cdf(t + h, gamma) - pearson3_cdf(t - h, gamma)) / (2 * h)
    np.testing.assert_allclose(pearson3_pdf(t, gamma), num, atol=1e-6)


def test_pearson3_near_normal():
    grid = np.linspace(-8, 8, 10_001)
    diff = np.abs(pearson3_cdf(grid, 1e-4) - stats.norm.cdf(grid))
    assert diff.max() < 1e-3


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3).filter(lambda g: abs(g) > 1e-3), st.floats(-5, 5))
def test_pearson3_reflection(gamma, t):
    assert pearson3_cdf(t, -gamma) == pytest.approx(1 - pearson3_cdf(-t, gamma), abs=1e-12)


def test_null_support_and_standardize():
    null = PearsonIIINull(gamma=1.0, mu=2.0, sigma=0.5, norm_product=4.0)
    lo, hi = null.support()
    assert lo == pytest.approx((2.0 - 1.0) / 4.0) and hi == math.inf
    assert null.cdf(lo - 0.01) == 0.0
    assert null.standardize(0.5) == pytest.approx(0.0)


# --- p-values -----------------------------------------------------------------

def test_analytic_pvalue_monotone_in_statistic(rng):
    gx, gy = random_gram(rng, 25), random_gram(rng, 25)
    null = grv_null(gx, gy)
    sf = null.sf(np.linspace(-0.5, 1.0, 500))
    assert np.all(np.diff(sf) <= 0)


def test_analytic_result_fields(rng):
    gx, gy = gram_of(rng.normal(size=(20, 3))), gram_of(rng.normal(size=(20, 2)))
    res = grv_pvalue_analytic(gx, gy)
    assert res.method == "analytic" and res.n_permutations == 0 and res.seed is None
    assert 0 <= res.p_value <= 1
    assert res.statistic == grv(gx, gy).value
    assert TestResult.from_json(res.to_json()) == res


def test_analytic_close_to_permutation(rng):
    x = rng.normal(size=(30, 4))
    y = x[:, :2] + 2.0 * rng.normal(size=(30, 2))
    gx, gy = gram_of(x), gram_of(y)
    pa = grv_pvalue_analytic(gx, gy).p_value
    pm = grv_pvalue_permutation(gx, gy, 20000, seed=5).p_value
    assert abs(pa - pm) < 0.02


def test_permutation_self_association(rng):
    g = gram_of(rng.normal(size=(15, 3)))
    res = grv_pvalue_permutation(g, g, 10_000, seed=1)
    assert res.p_value <= 0.001
    assert res.n_permutations == 10_000 and res.seed == 1


def test_identity_maximises_trace_small_n(rng):
    for n in range(3, 7):
        g = gram_of(rng.normal(size=(n, 2)))
        t = _enumerated_traces(g, g)
        assert t.max() == pytest.approx(np.sum(g.values ** 2))


def test_permutation_determinism(rng):
    gx, gy = random_gram(rng, 12), random_gram(rng, 12)
    a = grv_pvalue_permutation(gx, gy, 3000, seed=99)
    b = grv_pvalue_permutation(gx, gy, 3000, seed=99)
    assert a == b
    c = grv_pvalue_permutation(gx, gy, 3000, seed=99, workers=3)
    assert c == a


def test_exhaustive_pvalue_matches_oracle(rng):
    for n in (4, 5, 6):
        gx, gy = random_gram(rng, n), random_gram(rng, n)
        t = _enumerated_traces(gx, gy)
        obs = np.sum(gx.values * gy.values)
        want = np.count_nonzero(t >= obs - 1e-10 * gx.frobenius_norm * gy.frobenius_norm) / len(t)
        res = grv_pvalue_exhaustive(gx, gy)
        assert res.p_value == want and res.n_permutations == math.factorial(n)


def test_monte_carlo_agrees_with_exhaustive(rng):
    gx, gy = random_gram(rng, 6), random_gram(rng, 6)
    exact = grv_pvalue_exhaustive(gx, gy).p_value
    mc = grv_pvalue_permutation(gx, gy, 40_000, seed=3).p_value
    assert abs(mc - exact) < 4 * math.sqrt(exact * (1 - exact) / 40_000) + 1e-4


def test_mantel_permutation(rng):
    dx = euclidean_dm(rng.normal(size=(15, 2)))
    res = mantel_pvalue_permutation(dx, dx, 10_000, seed=4)
    assert res.p_value <= 0.001 and res.statistic == pytest.approx(1.0)
    assert mantel_pvalue_permutation(dx, dx, 500, seed=4) == mantel_pvalue_permutation(dx, dx, 500, seed=4)


def test_mantel_exhaustive_matches_oracle(rng):
    dx, dy = random_semimetric(rng, 6), euclidean_dm(rng.normal(size=(6, 2)))
    r = mantel(dx, dy).value
    vals = []
    for p in itertools.permutations(range(6)):
        p = list(p)
        vals.append(mantel(dx, DistanceMatrix(dy.values[np.ix_(p, p)])).value)
    want = np.count_nonzero(np.array(vals) >= r - 1e-10) / len(vals)
    assert mantel_pvalue_exhaustive(dx, dy).p_value == want
    mc = mantel_pvalue_permutation(dx, dy, 40_000, seed=8).p_value
    assert abs(mc - want) < 4 * math.sqrt(want * (1 - want) / 40_000) + 1e-4


def test_n_perm_validation(rng):
    g = random_gram(rng, 5)
    with pytest.raises(ValueError):
        grv_pvalue_permutation(g, g, 0, seed=1)


def test_permutation_pvalues_valid_under_null():
    rng = np.random.default_rng(77)
    pv = []
    for _ in range(300):
        gx, gy = gram_of(rng.normal(size=(15, 2))), gram_of(rng.normal(size=(15, 3)))
        pv.append(grv_pvalue_permutation(gx, gy, 199, seed=int(rng.integers(2**31))).p_value)
    pv = np.array(pv)
    for alpha in (0.01, 0.05, 0.1):
        sd = math.sqrt(alpha * (1 - alpha) / len(pv))
        assert np.mean(pv <= alpha) <= alpha + 2 * sd

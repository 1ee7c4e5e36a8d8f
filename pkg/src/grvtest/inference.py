"""Null distributions and p-values for the GRV and Mantel statistics.

The analytic route matches the first three exact permutation moments of
``T = tr(Gx Gy_pi)`` to a standardised Pearson type III law. Permutation and
full-enumeration routes are provided as oracles and as fallbacks.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special, stats

from . import permutations as perm
from ._partitions import raw_moment
from .association import _check_pair, _standardize, grv, mantel, trace_product
from .errors import BudgetError, DegenerateInputError, DimensionError, ValidationError
from .matrices import DistanceMatrix, GramMatrix

__all__ = [
    "PermutationMoments",
    "PearsonIIINull",
    "TestResult",
    "permutation_moments_closed_form",
    "permutation_moments_exhaustive",
    "pearson3_cdf",
    "pearson3_sf",
    "pearson3_pdf",
    "grv_null",
    "grv_pvalue_analytic",
    "grv_pvalue_permutation",
    "grv_pvalue_exhaustive",
    "mantel_pvalue_permutation",
    "mantel_pvalue_exhaustive",
    "EXHAUSTIVE_MAX_N",
]

EXHAUSTIVE_MAX_N = 9
# Below this |skewness| the shape parameter 4/gamma^2 exceeds 4e14 and the
# gamma law is numerically indistinguishable from the normal.
_NORMAL_SKEW = 1e-7

Method = Literal["analytic", "monte_carlo", "exhaustive"]


@dataclass(frozen=True)
class PermutationMoments:
    """Mean, variance and skewness of T over all N! simultaneous permutations."""

    mu: float
    sigma2: float
    gamma: float
    degenerate: bool = False

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: Method
    n_permutations: int = 0
    seed: int | None = None

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> TestResult:
        return cls(**json.loads(text))


# ---------------------------------------------------------------------------
# moments


def _doubly_centered(g: NDArray[np.float64]) -> NDArray[np.float64]:
    """Shift diagonal and off-diagonal entries so each part sums to zero.

    Under simultaneous permutation T changes only by a constant, which is the
    permutation mean, so moments of the shifted statistic are central moments.
    """
    n = g.shape[0]
    out = g.copy()
    tr = np.trace(g)
    off = g.sum() - tr
    out[~np.eye(n, dtype=bool)] -= off / (n * (n - 1))
    out[np.diag_indices(n)] -= tr / n
    return out


def _degeneracy_floor(gx: GramMatrix, gy: GramMatrix) -> float:
    return 1e-24 * (gx.frobenius_norm * gy.frobenius_norm) ** 2


def permutation_moments_closed_form(gx: GramMatrix, gy: GramMatrix) -> PermutationMoments:
    """Exact first three moments of T = tr(Gx Gy_pi) without enumeration.

    The mean is tr(Gx) tr(Gy) / (N - 1) for centred matrices. Variance and
    third central moment are exact finite sums over set partitions of index
    positions (see :mod:`grvtest._partitions`), computed in O(N^3).
    """
    _check_pair(gx, gy)
    n = gx.n
    if n < 3:
        raise DimensionError(f"closed-form moments need N >= 3, got {n}")
    mu = float(np.trace(gx.values) * np.trace(gy.values)) / (n - 1)
    a, b = _doubly_centered(gx.values), _doubly_centered(gy.values)
    m2 = float(raw_moment(a, b, 2))
    m3 = float(raw_moment(a, b, 3))
    if m2 <= _degeneracy_floor(gx, gy):
        return PermutationMoments(mu, max(m2, 0.0), 0.0, degenerate=True)
    return PermutationMoments(mu, m2, m3 / m2**1.5)


def _exhaustive_traces(gx: GramMatrix, gy: GramMatrix) -> NDArray[np.float64]:
    n = gx.n
    if n > EXHAUSTIVE_MAX_N:
        raise BudgetError(f"exhaustive enumeration limited to N <= {EXHAUSTIVE_MAX_N}, got {n}")
    a, b = gx.values, gy.values
    parts = [np.einsum("ij,bij->b", a, b[p[:, :, None], p[:, None, :]])
             for p in perm.all_permutations(n)]
    return np.concatenate(parts)


def permutation_moments_exhaustive(gx: GramMatrix, gy: GramMatrix) -> PermutationMoments:
    """Moments by enumerating all N! permutations (N <= 9)."""
    if gx.n != gy.n:
        raise DimensionError(f"sample counts differ: {gx.n} vs {gy.n}")
    t = _exhaustive_traces(gx, gy)
    mu = float(t.mean())
    c = t - mu
    sigma2 = float(np.mean(c * c))
    if sigma2 <= _degeneracy_floor(gx, gy):
        return PermutationMoments(mu, sigma2, 0.0, degenerate=True)
    return PermutationMoments(mu, sigma2, float(np.mean(c**3)) / sigma2**1.5)


# ---------------------------------------------------------------------------
# Pearson type III


# Above this shape parameter (|skewness| < 1e-3) scipy's incomplete gamma
# loses ~1e-6 absolute accuracy; the Wilson-Hilferty cube-root transform is
# accurate to O(1/shape) there and stays monotone.
_WH_SHAPE = 4e6


def _gamma_cdf(shape: float, x: NDArray[np.float64], upper: bool) -> NDArray[np.float64]:
    x = np.clip(x, 0.0, None)
    if shape <= _WH_SHAPE:
        return special.gammaincc(shape, x) if upper else special.gammainc(shape, x)
    z = 3.0 * math.sqrt(shape) * (np.cbrt(x / shape) - 1.0 + 1.0 / (9.0 * shape))
    return special.ndtr(-z) if upper else special.ndtr(z)


def _gamma_pdf_std(shape: float, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Density of (G - shape) / sqrt(shape) at the point with G = x."""
    if shape <= _WH_SHAPE:
        return math.sqrt(shape) * stats.gamma.pdf(x, shape)
    x = np.clip(x, 0.0, None)
    r = np.cbrt(x / shape)
    z = 3.0 * math.sqrt(shape) * (r - 1.0 + 1.0 / (9.0 * shape))
    with np.errstate(divide="ignore"):
        return np.where(x > 0, stats.norm.pdf(z) / (r * r), 0.0)


def pearson3_cdf(t: ArrayLike, gamma: float) -> NDArray[np.float64] | float:
    """CDF of the zero-mean, unit-variance Pearson type III law with skewness ``gamma``.

    For gamma > 0 this is (G - a) / sqrt(a) with G ~ Gamma(a), a = 4 / gamma^2.
    Negative skewness uses the reflection F(t; -g) = 1 - F(-t; g); gamma = 0
    is the standard normal.
    """
    t = np.asarray(t, dtype=float)
    if abs(gamma) < _NORMAL_SKEW:
        out = special.ndtr(t)
    else:
        a = 4.0 / gamma**2
        if gamma > 0:
            out = _gamma_cdf(a, a + t * math.sqrt(a), upper=False)
        else:
            out = _gamma_cdf(a, a - t * math.sqrt(a), upper=True)
    return float(out) if out.ndim == 0 else out


def pearson3_sf(t: ArrayLike, gamma: float) -> NDArray[np.float64] | float:
    """Upper tail 1 - CDF, computed directly to keep small p-values accurate."""
    t = np.asarray(t, dtype=float)
    if abs(gamma) < _NORMAL_SKEW:
        out = special.ndtr(-t)
    else:
        a = 4.0 / gamma**2
        if gamma > 0:
            out = _gamma_cdf(a, a + t * math.sqrt(a), upper=True)
        else:
            out = _gamma_cdf(a, a - t * math.sqrt(a), upper=False)
    return float(out) if out.ndim == 0 else out


def pearson3_pdf(t: ArrayLike, gamma: float) -> NDArray[np.float64] | float:
    t = np.asarray(t, dtype=float)
    if abs(gamma) < _NORMAL_SKEW:
        out = stats.norm.pdf(t)
    else:
        a = 4.0 / gamma**2
        out = _gamma_pdf_std(a, a + math.copysign(1.0, gamma) * t * math.sqrt(a))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PearsonIIINull:
    """Approximate null law of GRV: T_s = (GRV * norm_product - mu) / sigma ~ PIII(gamma)."""

    gamma: float
    mu: float
    sigma: float
    norm_product: float

    def standardize(self, x: ArrayLike) -> NDArray[np.float64]:
        return (np.asarray(x, dtype=float) * self.norm_product - self.mu) / self.sigma

    def cdf(self, x: ArrayLike):
        return pearson3_cdf(self.standardize(x), self.gamma)

    def sf(self, x: ArrayLike):
        return pearson3_sf(self.standardize(x), self.gamma)

    def pdf(self, x: ArrayLike):
        return self.norm_product / self.sigma * pearson3_pdf(self.standardize(x), self.gamma)

    def support(self) -> tuple[float, float]:
        """Interval outside which the density is zero (unbounded on one side)."""
        if abs(self.gamma) < _NORMAL_SKEW:
            return -math.inf, math.inf
        edge = (self.mu - 2.0 * self.sigma / self.gamma) / self.norm_product
        return (edge, math.inf) if self.gamma > 0 else (-math.inf, edge)


def grv_null(gx: GramMatrix, gy: GramMatrix, moments: PermutationMoments | None = None) -> PearsonIIINull:
    m = moments or permutation_moments_closed_form(gx, gy)
    if m.degenerate:
        raise DegenerateInputError(
            "permutation variance of tr(Gx Gy) is zero; the analytic null is undefined "
            "(every permutation gives the same statistic), use a permutation test instead"
        )
    return PearsonIIINull(m.gamma, m.mu, m.sigma, gx.frobenius_norm * gy.frobenius_norm)


# ---------------------------------------------------------------------------
# p-values


def grv_pvalue_analytic(gx: GramMatrix, gy: GramMatrix) -> TestResult:
    """Closed-form right-tailed p-value of the observed GRV; no permutations."""
    value = grv(gx, gy).value
    null = grv_null(gx, gy)
    p = float(null.sf(value))
    return TestResult(value, min(max(p, 0.0), 1.0), "analytic", 0, None)


def _tie_tol(scale: float) -> float:
    return 1e-10 * scale


def _trace_stat(gx: GramMatrix, gy: GramMatrix):
    a, b = gx.values, gy.values
    n = gx.n
    rows = max(1, int(4_000_000 // (n * n)))

    def stat(perms: NDArray[np.intp]) -> NDArray[np.float64]:
        out = np.empty(len(perms))
        for s in range(0, len(perms), rows):
            p = perms[s:s + rows]
            out[s:s + rows] = np.einsum("ij,bij->b", a, b[p[:, :, None], p[:, None, :]])
        return out

    return stat


def _check_n_perm(n_perm: int) -> None:
    if int(n_perm) < 1:
        raise ValidationError("n_perm must be at least 1")


def grv_pvalue_permutation(
    gx: GramMatrix,
    gy: GramMatrix,
    n_perm: int,
    seed: int,
    *,
    stream: int = 0,
    workers: int = 1,
) -> TestResult:
    """Monte Carlo p = (1 + #{GRV_pi >= GRV_obs}) / (n_perm + 1).

    Rows and columns of ``gy`` are permuted together; comparisons are made on
    tr(Gx Gy_pi), which orders identically to GRV because the norms are fixed.
    Results depend only on ``(seed, stream)``, never on ``workers``.
    """
    _check_n_perm(n_perm)
    value = grv(gx, gy).value
    observed = trace_product(gx, gy)
    scale = gx.frobenius_norm * gy.frobenius_norm
    hits = perm.count_at_least(_trace_stat(gx, gy), observed, _tie_tol(scale),
                               gx.n, n_perm, seed, stream, workers)
    return TestResult(value, (1 + hits) / (n_perm + 1), "monte_carlo", int(n_perm), int(seed))


def grv_pvalue_exhaustive(gx: GramMatrix, gy: GramMatrix) -> TestResult:
    """Exact permutation p-value #{pi : GRV_pi >= GRV_obs} / N! (N <= 9)."""
    value = grv(gx, gy).value
    observed = trace_product(gx, gy)
    t = _exhaustive_traces(gx, gy)
    tol = _tie_tol(gx.frobenius_norm * gy.frobenius_norm)
    hits = int(np.count_nonzero(t >= observed - tol))
    return TestResult(value, hits / len(t), "exhaustive", len(t), None)


def _mantel_stat(dx: DistanceMatrix, dy: DistanceMatrix):
    n = dx.n
    iu, ju = np.triu_indices(n, k=1)
    zx = _standardize(dx.upper_triangle(), "x")
    zy = np.zeros((n, n))
    zy[iu, ju] = _standardize(dy.upper_triangle(), "y")
    zy = zy + zy.T
    a = iu.size
    rows = max(1, int(4_000_000 // a))

    def stat(perms: NDArray[np.intp]) -> NDArray[np.float64]:
        out = np.empty(len(perms))
        for s in range(0, len(perms), rows):
            p = perms[s:s + rows]
            out[s:s + rows] = zy[p[:, iu], p[:, ju]] @ zx / (a - 1)
        return out

    return stat


def mantel_pvalue_permutation(
    dx: DistanceMatrix,
    dy: DistanceMatrix,
    n_perm: int,
    seed: int,
    *,
    stream: int = 0,
    workers: int = 1,
) -> TestResult:
    """Right-tailed Mantel permutation test with the add-one rule."""
    _check_n_perm(n_perm)
    r = mantel(dx, dy).value
    hits = perm.count_at_least(_mantel_stat(dx, dy), r, _tie_tol(1.0), dx.n, n_perm, seed, stream, workers)
    return TestResult(r, (1 + hits) / (n_perm + 1), "monte_carlo", int(n_perm), int(seed))


def mantel_pvalue_exhaustive(dx: DistanceMatrix, dy: DistanceMatrix) -> TestResult:
    r = mantel(dx, dy).value
    if dx.n > EXHAUSTIVE_MAX_N:
        raise BudgetError(f"exhaustive enumeration limited to N <= {EXHAUSTIVE_MAX_N}, got {dx.n}")
    stat = _mantel_stat(dx, dy)
    vals = np.concatenate([stat(p) for p in perm.all_permutations(dx.n)])
    hits = int(np.count_nonzero(vals >= r - _tie_tol(1.0)))
    return TestResult(r, hits / len(vals), "exhaustive", len(vals), None)

"""Pairwise distance measures for genotype (0/1/2) and real-valued sample vectors.

Every function returns a :class:`~grvtest.matrices.DistanceMatrix` whose
``metricity`` flag is the label attached to the measure, not a property
checked on the data.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.stats import rankdata

from .errors import DegenerateInputError, DimensionError, NumericError, ValidationError
from .matrices import DistanceMatrix, Metricity

__all__ = [
    "DistanceMeasure",
    "GenotypeMatrix",
    "RealMatrix",
    "GENOTYPE_MEASURES",
    "REAL_MEASURES",
    "pairwise_genotype",
    "pairwise_real",
    "pairwise",
    "nmi_distance",
    "descending_ranks",
    "match_counts",
]


class DistanceMeasure(str, enum.Enum):
    IBS = "IBS"
    SIMPLE_MATCHING = "SimpleMatching"
    SOKAL_SNEATH = "SokalSneath"
    ROGERS_TANIMOTO_I = "RogersTanimotoI"
    HAMMAN_I = "HammanI"
    EUCLIDEAN = "Euclidean"
    MANHATTAN = "Manhattan"
    MAXIMUM = "Maximum"
    BRAY_CURTIS = "BrayCurtis"
    MAHALANOBIS = "Mahalanobis"
    PEARSON_CORR = "PearsonCorr"
    COSINE = "Cosine"
    SPEARMAN_CORR = "SpearmanCorr"
    NMI = "NMI"

    @property
    def metricity(self) -> Metricity:
        # Manhattan and Maximum do satisfy the triangle inequality; the labels
        # below reproduce the reference table of measures verbatim regardless.
        if self is DistanceMeasure.EUCLIDEAN:
            return Metricity.METRIC
        return Metricity.SEMI_METRIC

    @property
    def is_genotype(self) -> bool:
        return self in GENOTYPE_MEASURES

    @classmethod
    def parse(cls, name: str | DistanceMeasure) -> DistanceMeasure:
        if isinstance(name, cls):
            return name
        key = str(name).replace("_", "").replace("-", "").lower()
        for m in cls:
            if m.value.lower() == key or m.name.replace("_", "").lower() == key:
                return m
        aliases = {"sm": cls.SIMPLE_MATCHING, "ss": cls.SOKAL_SNEATH, "rti": cls.ROGERS_TANIMOTO_I,
                   "hi": cls.HAMMAN_I, "euc": cls.EUCLIDEAN, "man": cls.MANHATTAN,
                   "max": cls.MAXIMUM, "bc": cls.BRAY_CURTIS, "mah": cls.MAHALANOBIS,
                   "pc": cls.PEARSON_CORR, "sc": cls.SPEARMAN_CORR, "cos": cls.COSINE}
        if key in aliases:
            return aliases[key]
        raise ValidationError(f"unknown distance measure {name!r}")


GENOTYPE_MEASURES = frozenset({
    DistanceMeasure.IBS,
    DistanceMeasure.SIMPLE_MATCHING,
    DistanceMeasure.SOKAL_SNEATH,
    DistanceMeasure.ROGERS_TANIMOTO_I,
    DistanceMeasure.HAMMAN_I,
})
REAL_MEASURES = frozenset(DistanceMeasure) - GENOTYPE_MEASURES


@dataclass(frozen=True, eq=False)
class GenotypeMatrix:
    """N x P minor-allele counts in {0, 1, 2}."""

    values: NDArray[np.int8]
    ids: list[str] | None = None

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DimensionError(f"genotype matrix must be non-empty 2-D, got shape {arr.shape}")
        if arr.dtype.kind == "f":
            bad_rows = int(np.count_nonzero(np.any(~np.isfinite(arr), axis=1)))
            if bad_rows:
                raise ValidationError(f"{bad_rows} sample rows contain missing genotypes")
        if not np.all(np.isin(arr, (0, 1, 2))):
            raise ValidationError("genotype entries must be 0, 1 or 2")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def columns(self, idx: ArrayLike) -> GenotypeMatrix:
        return GenotypeMatrix(self.values[:, np.asarray(idx, dtype=np.intp)], self.ids)


@dataclass(frozen=True, eq=False)
class RealMatrix:
    """N x Q finite real measurements."""

    values: NDArray[np.float64]
    ids: list[str] | None = None

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise DimensionError(f"real matrix must be non-empty 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("real matrix contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def q(self) -> int:
        return self.values.shape[1]

    def columns(self, idx: ArrayLike) -> RealMatrix:
        return RealMatrix(self.values[:, np.asarray(idx, dtype=np.intp)], self.ids)


# ---------------------------------------------------------------------------
# genotype measures


def match_counts(g: NDArray[np.integer]) -> NDArray[np.int64]:
    """Number of SNPs with identical allele count, for every sample pair (m+)."""
    g = np.asarray(g)
    out = np.zeros((g.shape[0], g.shape[0]), dtype=np.int64)
    for level in (0, 1, 2):
        ind = (g == level).astype(np.int64)
        out += ind @ ind.T
    return out


def _ibs(g: NDArray[np.integer]) -> NDArray[np.float64]:
    # s(x, y) = 2 - |x - y| for allele counts, so d = sum|x - y| / 2P.
    p = g.shape[1]
    return cdist(g.astype(float), g.astype(float), "cityblock") / (2.0 * p)


def pairwise_genotype(gm: GenotypeMatrix, measure: DistanceMeasure | str) -> DistanceMatrix:
    measure = DistanceMeasure.parse(measure)
    if not measure.is_genotype:
        raise ValidationError(f"{measure.value} is not a genotype measure")
    if not isinstance(gm, GenotypeMatrix):
        gm = GenotypeMatrix(np.asarray(gm))
    g, p = gm.values, gm.p
    if measure is DistanceMeasure.IBS:
        d = _ibs(g)
    else:
        m_plus = match_counts(g).astype(float)
        m_minus = p - m_plus
        if measure is DistanceMeasure.SIMPLE_MATCHING:
            d = 1.0 - m_plus / p
        elif measure is DistanceMeasure.SOKAL_SNEATH:
            d = 1.0 - m_plus / (m_plus + 0.5 * m_minus)
        elif measure is DistanceMeasure.ROGERS_TANIMOTO_I:
            d = 1.0 - m_plus / (m_plus + 2.0 * m_minus)
        else:
            # The normalisation pool includes i == j, so the maximum sits on the
            # diagonal and self-distances come out as exactly zero.
            s = (m_plus - m_minus) / p
            s_star = s + abs(s.min())
            d = 1.0 - s_star / s_star.max()
    return DistanceMatrix(d, measure.metricity, _ids(gm))


# ---------------------------------------------------------------------------
# real-vector measures


def descending_ranks(x: ArrayLike) -> NDArray[np.float64]:
    """Ranks with 1 for the largest value; ties share their mean position."""
    return rankdata(-np.asarray(x, dtype=float), method="average", axis=-1)


def _correlation_distance(x: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    xc = x - x.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.sum(xc * xc, axis=1))
    const = norms <= 1e-12 * np.maximum(np.abs(x).max(axis=1), 1.0) * np.sqrt(x.shape[1])
    if np.any(const):
        raise DegenerateInputError(
            f"{what} distance undefined: {int(const.sum())} sample vectors are constant"
        )
    u = xc / norms[:, None]
    d = np.clip(1.0 - u @ u.T, 0.0, 2.0)
    np.fill_diagonal(d, 0.0)
    return d


def _cosine_distance(x: NDArray[np.float64]) -> NDArray[np.float64]:
    norms = np.sqrt(np.sum(x * x, axis=1))
    if np.any(norms == 0):
        raise DegenerateInputError("cosine distance undefined for all-zero sample vectors")
    u = x / norms[:, None]
    d = np.clip(1.0 - u @ u.T, 0.0, 2.0)
    np.fill_diagonal(d, 0.0)
    return d


def _bray_curtis(x: NDArray[np.float64]) -> NDArray[np.float64]:
    num = cdist(x, x, "cityblock")
    rs = x.sum(axis=1)
    den = rs[:, None] + rs[None, :]
    off = ~np.eye(x.shape[0], dtype=bool)
    if np.any(den[off] <= 0):
        raise ValidationError("Bray-Curtis needs positive pairwise sums sum(x + y); use nonnegative data")
    with np.errstate(divide="ignore", invalid="ignore"):
        d = np.where(off, num / den, 0.0)
    return d


def _whitened(x: NDArray[np.float64], ridge: float | None, max_condition: float) -> NDArray[np.float64]:
    n, q = x.shape
    if q >= n:
        raise ValidationError(f"Mahalanobis distance needs fewer features than samples (Q={q}, N={n})")
    s = np.atleast_2d(np.cov(x, rowvar=False))
    lam, vec = np.linalg.eigh(s)
    cond = lam[-1] / lam[0] if lam[0] > 0 else math.inf
    if lam[-1] <= 0:
        raise NumericError("Mahalanobis covariance is zero (all sample vectors identical)")
    if cond > max_condition:
        if ridge is None:
            raise NumericError(f"Mahalanobis covariance is singular: condition number {cond:.3g}")
        s = s + ridge * np.trace(s) / q * np.eye(q)
        lam, vec = np.linalg.eigh(s)
        cond = lam[-1] / lam[0] if lam[0] > 0 else math.inf
        if cond > max_condition:
            raise NumericError(
                f"Mahalanobis covariance still singular after ridge: condition number {cond:.3g}"
            )
    return (x - x.mean(axis=0)) @ (vec / np.sqrt(lam))


def _nmi_bins(x: NDArray[np.float64], m: int) -> NDArray[np.intp]:
    # Equal-width, right-closed bins over each row's own range; the minimum goes to bin 0.
    lo = x.min(axis=1, keepdims=True)
    width = (x.max(axis=1, keepdims=True) - lo) / m
    with np.errstate(divide="ignore", invalid="ignore"):
        idx = np.ceil((x - lo) / width) - 1
    idx = np.where(width > 0, idx, 0)
    return np.clip(idx, 0, m - 1).astype(np.intp)


def _entropy(counts: NDArray, total: int, axis: int = -1) -> NDArray[np.float64]:
    p = counts / total
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=axis)


def _nmi_from_bins(bins: NDArray[np.intp], m: int) -> tuple[NDArray[np.float64], int]:
    n, p = bins.shape
    marg = np.stack([np.bincount(b, minlength=m) for b in bins])
    h = _entropy(marg, p)
    d = np.zeros((n, n))
    n_empty = 0
    offsets = (np.arange(n) * m * m)[:, None]
    for i in range(n):
        codes = bins[i][None, :] * m + bins + offsets
        joint = np.bincount(codes.ravel(), minlength=n * m * m).reshape(n, m * m)
        h_joint = _entropy(joint, p)
        h_max = np.maximum(h[i], h)
        with np.errstate(divide="ignore", invalid="ignore"):
            row = 1.0 - (h[i] + h - h_joint) / h_max
        zero = h_max <= 0
        n_empty += int(np.count_nonzero(zero[i + 1:]))
        d[i] = np.where(zero, 1.0, row)
    np.fill_diagonal(d, 0.0)
    return np.clip(0.5 * (d + d.T), 0.0, 1.0), n_empty


def nmi_distance(x: ArrayLike, y: ArrayLike) -> float:
    """Normalised mutual information distance between two vectors.

    Both vectors are histogrammed into ``floor(sqrt(P))`` equal-width bins
    over their own range. When both vectors are constant no information is
    defined and the distance is 1 (a warning is issued).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError("nmi_distance needs two 1-D vectors of equal length")
    if x.size < 2:
        raise DimensionError("nmi_distance needs at least 2 elements")
    m = math.isqrt(x.size)
    d, n_empty = _nmi_from_bins(_nmi_bins(np.stack([x, y]), m), m)
    if n_empty:
        warnings.warn("NMI undefined for two constant vectors; distance set to 1", stacklevel=2)
    return float(d[0, 1])


def pairwise_real(
    rm: RealMatrix,
    measure: DistanceMeasure | str,
    *,
    ridge: float | None = 1e-8,
    max_condition: float = 1e12,
) -> DistanceMatrix:
    """Distances between the rows of ``rm``.

    Parameters
    ----------
    ridge
        Mahalanobis only. When the sample covariance S has condition number
        above ``max_condition``, ``ridge * trace(S) / Q`` is added to its
        diagonal. ``None`` turns an ill-conditioned S into an error.
    """
    measure = DistanceMeasure.parse(measure)
    if measure.is_genotype:
        raise ValidationError(f"{measure.value} is a genotype measure")
    if not isinstance(rm, RealMatrix):
        rm = RealMatrix(np.asarray(rm, dtype=float))
    x = rm.values
    if measure is DistanceMeasure.EUCLIDEAN:
        d = squareform(pdist(x, "euclidean"))
    elif measure is DistanceMeasure.MANHATTAN:
        d = squareform(pdist(x, "cityblock"))
    elif measure is DistanceMeasure.MAXIMUM:
        d = squareform(pdist(x, "chebyshev"))
    elif measure is DistanceMeasure.BRAY_CURTIS:
        d = _bray_curtis(x)
    elif measure is DistanceMeasure.MAHALANOBIS:
        d = squareform(pdist(_whitened(x, ridge, max_condition), "euclidean"))
    elif measure is DistanceMeasure.PEARSON_CORR:
        d = _correlation_distance(x, "Pearson correlation")
    elif measure is DistanceMeasure.SPEARMAN_CORR:
        d = _correlation_distance(descending_ranks(x), "Spearman correlation")
    elif measure is DistanceMeasure.COSINE:
        d = _cosine_distance(x)
    else:
        if x.shape[1] < 2:
            raise DimensionError("NMI distance needs at least 2 features")
        m = math.isqrt(x.shape[1])
        d, n_empty = _nmi_from_bins(_nmi_bins(x, m), m)
        if n_empty:
            warnings.warn(
                f"NMI undefined for {n_empty} pairs of constant vectors; distance set to 1",
                stacklevel=2,
            )
    return DistanceMatrix(d, measure.metricity, _ids(rm))


def pairwise(data: GenotypeMatrix | RealMatrix, measure: DistanceMeasure | str, **kwargs) -> DistanceMatrix:
    """Dispatch to :func:`pairwise_genotype` or :func:`pairwise_real` by measure."""
    measure = DistanceMeasure.parse(measure)
    if measure.is_genotype:
        if not isinstance(data, GenotypeMatrix):
            data = GenotypeMatrix(np.asarray(data.values if isinstance(data, RealMatrix) else data))
        return pairwise_genotype(data, measure)
    if isinstance(data, GenotypeMatrix):
        data = RealMatrix(data.values.astype(float), data.ids)
    return pairwise_real(data, measure, **kwargs)


def _ids(m) -> tuple[str, ...] | None:
    return tuple(m.ids) if m.ids is not None else None

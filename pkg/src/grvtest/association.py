"""GRV and Mantel statistics for paired distance matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DegenerateInputError, DimensionError, ValidationError
from .matrices import DistanceMatrix, GramMatrix, Metricity, gower_center

__all__ = [
    "GrvValue",
    "MantelValue",
    "grv",
    "grv_from_distances",
    "mantel",
    "grv_bounds",
    "frobenius_from_grv",
    "frobenius_distance",
    "trace_product",
]


def trace_product(gx: GramMatrix, gy: GramMatrix) -> float:
    """tr(Gx Gy) as the elementwise sum, valid because both are symmetric."""
    return float(np.sum(gx.values * gy.values))


def _check_pair(gx: GramMatrix, gy: GramMatrix) -> None:
    if gx.n != gy.n:
        raise DimensionError(f"sample counts differ: {gx.n} vs {gy.n}")
    for name, g in (("x", gx), ("y", gy)):
        if g.degenerate or g.frobenius_norm == 0:
            raise DegenerateInputError(f"Gram matrix {name} has zero Frobenius norm")


@dataclass(frozen=True, eq=False)
class GrvValue:
    """A GRV statistic together with the pair it came from.

    ``bounds`` needs two eigendecompositions and is computed on first access.
    """

    value: float
    gx: GramMatrix = field(repr=False)
    gy: GramMatrix = field(repr=False)

    @cached_property
    def bounds(self) -> tuple[float, float]:
        return grv_bounds(self.gx, self.gy)

    @property
    def both_metric(self) -> bool:
        return self.gx.metricity is Metricity.METRIC and self.gy.metricity is Metricity.METRIC

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class MantelValue:
    value: float
    a: int


def grv(gx: GramMatrix, gy: GramMatrix) -> GrvValue:
    """GRV(Gx, Gy) = tr(Gx Gy) / (||Gx|| ||Gy||)."""
    _check_pair(gx, gy)
    t = trace_product(gx, gy)
    v = t / (gx.frobenius_norm * gy.frobenius_norm)
    # Cauchy-Schwarz caps |v| at 1; only round-off can push it past.
    v = min(max(v, -1.0), 1.0)
    return GrvValue(v, gx, gy)


def grv_from_distances(dx: DistanceMatrix, dy: DistanceMatrix) -> GrvValue:
    return grv(gower_center(dx), gower_center(dy))


def mantel(dx: DistanceMatrix, dy: DistanceMatrix) -> MantelValue:
    """Pearson correlation of the upper-triangular distances."""
    if dx.n != dy.n:
        raise DimensionError(f"sample counts differ: {dx.n} vs {dy.n}")
    if dx.n < 3:
        raise DimensionError(f"Mantel statistic needs N >= 3, got {dx.n}")
    vx, vy = dx.upper_triangle(), dy.upper_triangle()
    a = vx.size
    zx, zy = _standardize(vx, "x"), _standardize(vy, "y")
    r = float(np.dot(zx, zy) / (a - 1))
    return MantelValue(min(max(r, -1.0), 1.0), a)


def _standardize(v: np.ndarray, name: str) -> np.ndarray:
    c = v - v.mean()
    s = math.sqrt(float(np.dot(c, c)) / (v.size - 1))
    if s <= 1e-14 * max(float(np.abs(v).max()), 1e-300):
        raise DegenerateInputError(f"upper-triangular distances of {name} have zero variance")
    return c / s


def grv_bounds(gx: GramMatrix, gy: GramMatrix) -> tuple[float, float]:
    """Eigenvalue bounds on GRV from the trace inequality for symmetric matrices.

    With both spectra sorted in descending order the trace of the product lies
    between the sum of oppositely ordered and of equally ordered products.
    """
    _check_pair(gx, gy)
    lx, ly = gx.eigenvalues, gy.eigenvalues
    norm = gx.frobenius_norm * gy.frobenius_norm
    lower = float(np.dot(lx, ly[::-1])) / norm
    upper = float(np.dot(lx, ly)) / norm
    return lower, upper


def frobenius_from_grv(v: GrvValue | float) -> float:
    """Frobenius distance between the norm-scaled Gram matrices, sqrt(2 (1 - GRV))."""
    value = float(v)
    if value > 1.0 + 1e-9:
        raise ValidationError(f"GRV value {value} exceeds 1")
    return math.sqrt(2.0 * max(0.0, 1.0 - value))


def frobenius_distance(gx: GramMatrix, gy: GramMatrix) -> float:
    """Direct Frobenius distance between Gx/||Gx|| and Gy/||Gy||."""
    _check_pair(gx, gy)
    diff = gx.values / gx.frobenius_norm - gy.values / gy.frobenius_norm
    return float(np.sqrt(np.sum(diff * diff)))

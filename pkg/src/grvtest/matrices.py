"""Distance and Gram matrix containers, Gower centering and principal coordinates."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, NumericError, ValidationError

__all__ = [
    "Metricity",
    "DistanceMatrix",
    "GramMatrix",
    "PrincipalCoordinates",
    "gower_center",
    "principal_coordinates",
    "structure_tolerance",
    "triangle_violations",
]


class Metricity(str, enum.Enum):
    METRIC = "metric"
    SEMI_METRIC = "semi-metric"
    UNKNOWN = "unknown"


def structure_tolerance(values: NDArray[np.float64]) -> float:
    """Absolute tolerance for symmetry and centering checks: 1e-10 * N * max|value|."""
    n = values.shape[0]
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    return 1e-10 * n * max(scale, np.finfo(float).tiny)


def _square(values: ArrayLike) -> NDArray[np.float64]:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric, nonnegative N x N dissimilarity matrix with zero diagonal.

    ``metricity`` is declared by whatever produced the matrix; it is never
    inferred. Use :func:`triangle_violations` to audit an ``unknown`` matrix.
    """

    values: NDArray[np.float64]
    metricity: Metricity = Metricity.UNKNOWN
    ids: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        arr = _square(self.values)
        tol = structure_tolerance(arr)
        if np.max(np.abs(arr - arr.T), initial=0.0) > tol:
            raise ValidationError("distance matrix is not symmetric")
        if np.max(np.abs(np.diag(arr)), initial=0.0) > tol:
            raise ValidationError("distance matrix has a nonzero diagonal")
        if np.min(arr, initial=0.0) < -tol:
            raise ValidationError("distance matrix has negative entries")
        # Snap round-off so downstream code sees exact structure.
        arr = 0.5 * (arr + arr.T)
        np.fill_diagonal(arr, 0.0)
        np.clip(arr, 0.0, None, out=arr)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "metricity", Metricity(self.metricity))
        if self.ids is not None:
            if len(self.ids) != arr.shape[0]:
                raise DimensionError(f"{len(self.ids)} ids for {arr.shape[0]} samples")
            object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def upper_triangle(self) -> NDArray[np.float64]:
        """Entries above the diagonal, row-major."""
        iu = np.triu_indices(self.n, k=1)
        return self.values[iu]

    def scaled(self, factor: float) -> DistanceMatrix:
        if factor <= 0:
            raise ValidationError("scale factor must be positive")
        return DistanceMatrix(self.values * factor, self.metricity, self.ids)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Gower centered inner-product matrix ``G = -1/2 C D^2 C``.

    ``degenerate`` is set when every entry is zero; such a matrix is a legal
    result of centering but cannot enter the GRV statistic.
    """

    values: NDArray[np.float64]
    metricity: Metricity = Metricity.UNKNOWN
    degenerate: bool = field(default=False)

    def __post_init__(self) -> None:
        arr = _square(self.values)
        tol = structure_tolerance(arr)
        if np.max(np.abs(arr - arr.T), initial=0.0) > tol:
            raise ValidationError("Gram matrix is not symmetric")
        if np.max(np.abs(arr.sum(axis=0)), initial=0.0) > tol:
            raise ValidationError("Gram matrix is not centered (nonzero row/column sums)")
        arr = 0.5 * (arr + arr.T)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "metricity", Metricity(self.metricity))
        object.__setattr__(self, "degenerate", not np.any(arr))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @cached_property
    def frobenius_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values * self.values)))

    @cached_property
    def eigenvalues(self) -> NDArray[np.float64]:
        """Eigenvalues in descending order."""
        try:
            lam = np.linalg.eigvalsh(self.values)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"eigensolver failed: {exc}") from exc
        return lam[::-1]

    def permuted(self, perm: ArrayLike) -> GramMatrix:
        """Simultaneous row/column permutation."""
        p = np.asarray(perm, dtype=np.intp)
        return GramMatrix(self.values[np.ix_(p, p)], self.metricity)


@dataclass(frozen=True, eq=False)
class PrincipalCoordinates:
    """Classical MDS embedding of a Gram matrix.

    ``coords`` is N x N; axes belonging to non-positive eigenvalues are zero.
    ``reconstruction_error`` is the Frobenius norm of ``G - X X^T``, which is
    positive exactly when G has negative eigenvalues (semi-metric input).
    """

    coords: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    reconstruction_error: float

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def negative_eigenvalues(self) -> NDArray[np.float64]:
        return self.eigenvalues[self.eigenvalues < 0]

    def distances(self) -> NDArray[np.float64]:
        x = self.coords
        sq = np.sum(x * x, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
        return np.sqrt(np.clip(d2, 0.0, None))


def gower_center(d: DistanceMatrix) -> GramMatrix:
    """Return ``G = -1/2 C (D o D) C`` with ``C = I - J/N``.

    Centering is done by subtracting row, column and grand means, which is
    algebraically identical to the matrix products and O(N^2).
    """
    if not isinstance(d, DistanceMatrix):
        d = DistanceMatrix(d)
    if d.n < 2:
        raise DimensionError(f"need at least 2 samples, got {d.n}")
    sq = d.values * d.values
    row = sq.mean(axis=1)
    g = -0.5 * (sq - row[:, None] - row[None, :] + row.mean())
    gram = GramMatrix(g, d.metricity)
    if gram.degenerate:
        warnings.warn("all-zero distance matrix gives a zero Gram matrix", stacklevel=2)
    return gram


def principal_coordinates(g: GramMatrix) -> PrincipalCoordinates:
    try:
        lam, vec = np.linalg.eigh(g.values)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(lam)[::-1]
    lam, vec = lam[order], vec[:, order]
    tol = structure_tolerance(g.values) if g.n else 0.0
    keep = lam > tol
    coords = np.zeros_like(vec)
    coords[:, keep] = vec[:, keep] * np.sqrt(lam[keep])
    err = float(np.linalg.norm(g.values - coords @ coords.T))
    lam = np.where(np.abs(lam) <= tol, 0.0, lam)
    return PrincipalCoordinates(coords, lam, err)


def triangle_violations(d: DistanceMatrix, rtol: float = 1e-12) -> int:
    """Count ordered triples (i, j, k) with d[i,j] > d[i,k] + d[k,j].

    O(N^3) time, O(N^2) memory per pivot.
    """
    v = d.values
    scale = float(v.max(initial=0.0))
    count = 0
    for k in range(d.n):
        via = v[:, k][:, None] + v[k, :][None, :]
        count += int(np.count_nonzero(v > via + rtol * scale))
    return count

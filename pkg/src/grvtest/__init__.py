"""Association tests between paired distance matrices (GRV and Mantel)."""

from .association import (
    GrvValue,
    MantelValue,
    frobenius_distance,
    frobenius_from_grv,
    grv,
    grv_bounds,
    grv_from_distances,
    mantel,
)
from .distances import (
    DistanceMeasure,
    GenotypeMatrix,
    RealMatrix,
    nmi_distance,
    pairwise,
    pairwise_genotype,
    pairwise_real,
)
from .errors import (
    BudgetError,
    DegenerateInputError,
    DimensionError,
    GRVError,
    NumericError,
    ValidationError,
)
from .inference import (
    PearsonIIINull,
    PermutationMoments,
    TestResult,
    grv_null,
    grv_pvalue_analytic,
    grv_pvalue_exhaustive,
    grv_pvalue_permutation,
    mantel_pvalue_exhaustive,
    mantel_pvalue_permutation,
    pearson3_cdf,
    pearson3_pdf,
    pearson3_sf,
    permutation_moments_closed_form,
    permutation_moments_exhaustive,
)
from .matrices import (
    DistanceMatrix,
    GramMatrix,
    Metricity,
    PrincipalCoordinates,
    gower_center,
    principal_coordinates,
)

__all__ = [
    "BudgetError",
    "DegenerateInputError",
    "DimensionError",
    "DistanceMatrix",
    "DistanceMeasure",
    "GRVError",
    "GenotypeMatrix",
    "GramMatrix",
    "GrvValue",
    "MantelValue",
    "Metricity",
    "NumericError",
    "PearsonIIINull",
    "PermutationMoments",
    "PrincipalCoordinates",
    "RealMatrix",
    "TestResult",
    "ValidationError",
    "frobenius_distance",
    "frobenius_from_grv",
    "gower_center",
    "grv",
    "grv_bounds",
    "grv_from_distances",
    "grv_null",
    "grv_pvalue_analytic",
    "grv_pvalue_exhaustive",
    "grv_pvalue_permutation",
    "mantel",
    "mantel_pvalue_exhaustive",
    "mantel_pvalue_permutation",
    "nmi_distance",
    "pairwise",
    "pairwise_genotype",
    "pairwise_real",
    "pearson3_cdf",
    "pearson3_pdf",
    "pearson3_sf",
    "permutation_moments_closed_form",
    "permutation_moments_exhaustive",
    "principal_coordinates",
]

__version__ = "0.1.0"

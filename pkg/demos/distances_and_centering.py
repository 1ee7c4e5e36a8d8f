"""Distance measures, Gower centering and principal coordinates.

Builds genotype and expression distance matrices for a small simulated
cohort, centres them, and shows how a semi-metric measure can produce a
Gram matrix with negative eigenvalues.
"""

import numpy as np

from grvtest import RealMatrix, gower_center, pairwise, principal_coordinates
from grvtest.simulation import EqtlConfig, dataset_rng, generate_eqtl

data = generate_eqtl(EqtlConfig(n=30, p=8, q=5), dataset_rng(1))

for measure in ("IBS", "SokalSneath", "HammanI"):
    d = pairwise(data.genotypes, measure)
    print(f"{measure:>16}: mean distance {d.upper_triangle().mean():.3f} ({d.metricity.value})")

for measure in ("Euclidean", "Mahalanobis", "PearsonCorr", "NMI"):
    d = pairwise(data.expression, measure)
    print(f"{measure:>16}: mean distance {d.upper_triangle().mean():.3f} ({d.metricity.value})")

# Euclidean distances centre to the cross-product of the centred data.
x = data.expression.values
g = gower_center(pairwise(data.expression, "Euclidean"))
xc = x - x.mean(axis=0)
print("Gower == centred XX^T:", np.allclose(g.values, xc @ xc.T))

# Bray-Curtis is not Euclidean-embeddable in general.
bc = gower_center(pairwise(RealMatrix(np.abs(x)), "BrayCurtis"))
pc = principal_coordinates(bc)
print(f"Bray-Curtis Gram: {pc.negative_eigenvalues.size} negative eigenvalues, "
      f"embedding error {pc.reconstruction_error:.3g}")

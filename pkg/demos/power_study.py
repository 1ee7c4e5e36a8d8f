"""Power and size of the GRV test on simulated eQTL data.

A small budget version of the full study; pass larger ``runs`` and
``datasets_per_run`` for tighter estimates.
"""

from grvtest.simulation import EqtlConfig, estimate_power, estimate_size

alpha = 0.001
for gex in ("Mahalanobis", "Euclidean"):
    for n in (30, 50, 70):
        est = estimate_power(EqtlConfig(n=n, seed=3), "IBS", gex, runs=5, datasets_per_run=40, alpha=alpha)
        print(f"IBS x {gex:<11} N={n:<3} power {est.mean_power:.3f} (sd {est.sd:.3f})")

mantel = estimate_power(EqtlConfig(n=50, seed=3), "IBS", "Mahalanobis", "mantel_permutation",
                        runs=3, datasets_per_run=30, alpha=alpha, n_perm=5000)
print(f"Mantel, IBS x Mahalanobis N=50: power {mantel.mean_power:.3f}")

size = estimate_size(EqtlConfig(n=50, seed=4), runs=5, datasets_per_run=100)
for level, est in size.items():
    print(f"null rejection rate at {level:.2f}: {est.mean_power:.3f} (sd {est.sd:.3f})")

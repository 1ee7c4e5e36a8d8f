"""Agreement between two pathway rankings with the top-k Canberra distance.

Two noisy copies of the same underlying ranking agree more at the top than
random lists; the permutation p-value and BH q-values quantify it.
"""

import numpy as np

from grvtest.meta import RankedList, benjamini_hochberg, canberra_sweep

rng = np.random.default_rng(5)
ids = [f"PW{i:03d}" for i in range(200)]
signal = np.linspace(3, 0, len(ids))  # strong effects first
list_a = RankedList(tuple(np.array(ids)[np.argsort(-(signal + rng.normal(size=200)))]))
list_b = RankedList(tuple(np.array(ids)[np.argsort(-(signal + rng.normal(size=200)))]))

ks = [5, 10, 20, 50, 100, 200]
sweep = canberra_sweep(list_a, list_b, ks, n_perm=5000, seed=1)
q = benjamini_hochberg([p for _, p in sweep])
for k, (d, p), qv in zip(ks, sweep, q):
    print(f"k={k:<4} normalised distance {d:.3f}  p {p:.4f}  q {qv:.4f}")

"""Batch scan of a synthetic multi-pathway cohort, then maxP ranking.

Writes the cohort and scan report under ./pathway_scan_out. The same run is
available from the shell as ``grvtest scan <manifest> --out <dir>``.
"""

from pathlib import Path

from grvtest.scan import load_manifest, run_scan, write_report
from grvtest.simulation import write_synthetic_cohort

root = Path("pathway_scan_out")
manifest, planted = write_synthetic_cohort(root / "cohort", n=60, n_pathways=20, n_planted=5, seed=11)
report = run_scan(load_manifest(manifest))
write_report(report, root / "report")

print("planted:", ", ".join(planted))
for row in report.combined[:8]:
    mark = "*" if row["pathway_id"] in planted else " "
    print(f"{row['rank']:>3} {mark} {row['pathway_id']}  maxP {row['combined_p']:.3g}")
print(f"{len(report.results)} tests written to {root / 'report'}")

"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 numeric degeneracy, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .distances import DistanceMeasure, GenotypeMatrix, RealMatrix, pairwise
from .errors import BudgetError, DegenerateInputError, DimensionError, NumericError, ValidationError
from .inference import (
    grv_pvalue_analytic,
    grv_pvalue_exhaustive,
    grv_pvalue_permutation,
    mantel_pvalue_exhaustive,
    mantel_pvalue_permutation,
)
from .io import read_table
from .matrices import gower_center
from .meta import RankedList, benjamini_hochberg, canberra_sweep, read_ranked_list
from .scan import SEED_ENV, load_manifest, run_scan, write_report
from .simulation import EqtlConfig, estimate_power, estimate_size, report_row, write_report_csv, write_report_json

EXIT_OK, EXIT_VALIDATION, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("grvtest")


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def _load_block(path: str, measure: DistanceMeasure, id_column: bool):
    values, ids, _ = read_table(path, id_column=id_column)
    if measure.is_genotype:
        return GenotypeMatrix(values, ids)
    return RealMatrix(values, ids)


def _align(x, y, join_on_id: bool):
    if join_on_id:
        if x.ids is None or y.ids is None:
            raise ValidationError("--join-on-id needs an id column in both files")
        ys = {s: i for i, s in enumerate(y.ids)}
        common = [s for s in x.ids if s in ys]
        if not common:
            raise ValidationError("no shared sample ids")
        xi = [x.ids.index(s) for s in common]
        yi = [ys[s] for s in common]
        x = type(x)(x.values[xi], common)
        y = type(y)(y.values[yi], common)
    if x.n != y.n:
        raise ValidationError(f"sample counts differ: x has {x.n} samples, y has {y.n}")
    return x, y


def cmd_test(args: argparse.Namespace) -> int:
    mx = DistanceMeasure.parse(args.x_measure)
    my = DistanceMeasure.parse(args.y_measure)
    id_col = args.id_column or args.join_on_id
    x, y = _align(_load_block(args.x, mx, id_col), _load_block(args.y, my, id_col), args.join_on_id)
    dx, dy = pairwise(x, mx), pairwise(y, my)
    seed = _default_seed() if args.seed is None else args.seed
    if args.statistic == "mantel":
        if args.method == "analytic":
            raise ValidationError("the Mantel statistic has no analytic null; use monte_carlo or exhaustive")
        res = (mantel_pvalue_exhaustive(dx, dy) if args.method == "exhaustive"
               else mantel_pvalue_permutation(dx, dy, args.n_perm, seed, workers=args.workers))
    else:
        gx, gy = gower_center(dx), gower_center(dy)
        if args.method == "analytic":
            res = grv_pvalue_analytic(gx, gy)
        elif args.method == "exhaustive":
            res = grv_pvalue_exhaustive(gx, gy)
        else:
            res = grv_pvalue_permutation(gx, gy, args.n_perm, seed, workers=args.workers)
    print(res.to_json())
    return EXIT_OK


def cmd_scan(args: argparse.Namespace) -> int:
    overrides = {"seed": args.seed, "workers": args.workers, "method": args.method,
                 "n_perm": args.n_perm, "min_features": args.min_features,
                 "max_features": args.max_features}
    manifest = load_manifest(args.manifest, overrides)
    report = run_scan(manifest)
    write_report(report, args.out)
    print(json.dumps({"out": str(args.out), "tests": len(report.results),
                      "pathways": len(report.combined), "skipped": len(report.skipped)}))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    rows = []
    cfg = None
    for n in args.n:
        cfg = EqtlConfig(n=n, p=args.p, q=args.q, maf_range=(args.maf_low, args.maf_high),
                         associated=args.mode == "power", seed=seed, wishart_df=args.wishart_df,
                         redraw_per_dataset=not args.shared_noise)
        for gen in args.gen_measure:
            for gex in args.gex_measure:
                for test in args.test:
                    if args.mode == "power":
                        est = estimate_power(cfg, gen, gex, test, args.runs, args.datasets, args.alpha,
                                             n_perm=args.n_perm, workers=args.workers)
                        rows.append(report_row(cfg, gen, gex, test, est))
                    else:
                        for _, est in estimate_size(cfg, args.levels, args.runs, args.datasets,
                                                      gen_dist=gen, gex_dist=gex, test=test,
                                                      n_perm=args.n_perm, workers=args.workers).items():
                            rows.append(report_row(cfg, gen, gex, test, est))
    if args.runs == 1:
        log.warning("runs=1: standard deviation across runs is undefined and reported as 0")
    if args.out:
        write_report_csv(args.out, rows)
        if args.json:
            write_report_json(args.json, rows, cfg)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return EXIT_OK


def _parse_ks(spec: str, size: int) -> list[int]:
    ks: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part or ":" in part:
            lo, hi = part.replace(":", "-").split("-")
            ks.extend(range(int(lo), int(hi) + 1))
        elif part:
            ks.append(int(part))
    bad = [k for k in ks if not 1 <= k <= size]
    if bad:
        raise ValidationError(f"k values {bad} outside [1, {size}] (list size {size})")
    return sorted(set(ks))


def _ranking_from_report(path: str) -> RankedList:
    data = json.loads(Path(path).read_text())
    ordered = sorted(data["combined"], key=lambda c: c["rank"])
    return RankedList(tuple(c["pathway_id"] for c in ordered))


def cmd_meta(args: argparse.Namespace) -> int:
    if args.list_a and args.list_b:
        a, b = read_ranked_list(args.list_a), read_ranked_list(args.list_b)
    elif args.report_a and args.report_b:
        a, b = _ranking_from_report(args.report_a), _ranking_from_report(args.report_b)
    else:
        raise ValidationError("give either --list-a/--list-b or --report-a/--report-b")
    if set(a.ids) != set(b.ids):
        raise ValidationError(f"ranked lists cover different ids ({len(a)} vs {len(b)} items)")
    seed = _default_seed() if args.seed is None else args.seed
    ks = _parse_ks(args.k or f"1-{len(a)}", len(a))
    sweep = canberra_sweep(a, b, ks, args.n_perm, seed, workers=args.workers)
    q = benjamini_hochberg([p for _, p in sweep])
    rows = [{"k": k, "distance": d, "p_value": p, "q_value": float(qv)}
            for k, (d, p), qv in zip(ks, sweep, q)]
    if args.out_csv:
        with open(args.out_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["k", "distance", "p_value", "q_value"], lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    text = json.dumps({"n_perm": args.n_perm, "seed": seed, "size": len(a), "rows": rows}, indent=2)
    if args.out_json:
        Path(args.out_json).write_text(text + "\n")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grvtest", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="one GRV or Mantel test between two sample tables")
    t.add_argument("--x", required=True, help="first table (samples as rows)")
    t.add_argument("--y", required=True, help="second table (samples as rows)")
    t.add_argument("--x-measure", required=True)
    t.add_argument("--y-measure", required=True)
    t.add_argument("--statistic", choices=["grv", "mantel"], default="grv")
    t.add_argument("--method", choices=["analytic", "monte_carlo", "exhaustive"], default="analytic")
    t.add_argument("--n-perm", type=int, default=10_000)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--id-column", action="store_true", help="first column holds sample ids")
    t.add_argument("--join-on-id", action="store_true", help="align rows by sample id")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("scan", help="pathway scan from a JSON manifest")
    s.add_argument("manifest")
    s.add_argument("--out", default="scan_out")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--method", choices=["analytic", "monte_carlo"], default=None)
    s.add_argument("--n-perm", type=int, default=None)
    s.add_argument("--min-features", type=int, default=None)
    s.add_argument("--max-features", type=int, default=None)
    s.set_defaults(func=cmd_scan)

    m = sub.add_parser("simulate", help="power or size study on synthetic eQTL data")
    m.add_argument("--mode", choices=["power", "size"], default="power")
    m.add_argument("--n", type=int, nargs="+", default=[50])
    m.add_argument("--p", type=int, default=2)
    m.add_argument("--q", type=int, default=10)
    m.add_argument("--maf-low", type=float, default=0.1)
    m.add_argument("--maf-high", type=float, default=0.5)
    m.add_argument("--wishart-df", type=int, default=None)
    m.add_argument("--shared-noise", action="store_true", help="draw mu and Sigma once per run")
    m.add_argument("--gen-measure", nargs="+", default=["IBS"])
    m.add_argument("--gex-measure", nargs="+", default=["Mahalanobis"])
    m.add_argument("--test", nargs="+", default=["grv_analytic"],
                   choices=["grv_analytic", "grv_permutation", "mantel_permutation"])
    m.add_argument("--runs", type=int, default=10)
    m.add_argument("--datasets", type=int, default=50)
    m.add_argument("--alpha", type=float, default=0.001)
    m.add_argument("--levels", type=float, nargs="+", default=[0.01, 0.05, 0.10])
    m.add_argument("--n-perm", type=int, default=10_000)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--out", help="CSV report path (stdout if omitted)")
    m.add_argument("--json", help="JSON report path (with --out)")
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("meta", help="compare two ranked lists with the top-k Canberra distance")
    e.add_argument("--list-a")
    e.add_argument("--list-b")
    e.add_argument("--report-a", help="results.json from a scan")
    e.add_argument("--report-b")
    e.add_argument("--k", help="k values, e.g. '1-50' or '5,10,20' (default: all)")
    e.add_argument("--n-perm", type=int, default=5000)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out-json")
    e.add_argument("--out-csv")
    e.set_defaults(func=cmd_meta)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValidationError, DimensionError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DegenerateInputError, NumericError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

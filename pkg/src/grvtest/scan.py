"""Batch pathway scans: every pathway x distance-pair test, maxP combination, ranking."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from .distances import DistanceMeasure, GenotypeMatrix, RealMatrix, pairwise
from .errors import GRVError, ValidationError
from .inference import grv_pvalue_analytic, grv_pvalue_permutation
from .io import read_table
from .matrices import gower_center
from .meta import combine_maxp, rank_by_combined
from .permutations import stream_id

__all__ = ["ScanManifest", "ScanReport", "load_manifest", "read_pathway_map", "run_scan", "write_report"]

log = logging.getLogger(__name__)

SEED_ENV = "GRVTEST_SEED"


@dataclass
class ScanManifest:
    genotype_file: str
    expression_file: str
    pathway_map_file: str
    gen_measures: list[str] = field(default_factory=lambda: ["IBS"])
    gex_measures: list[str] = field(default_factory=lambda: ["Euclidean"])
    method: str = "analytic"  # or "monte_carlo"
    n_perm: int = 10_000
    seed: int = 0
    min_features: int = 5
    max_features: int = 200
    workers: int = 1
    id_column: bool = False
    join_on_id: bool = False

    def __post_init__(self) -> None:
        if self.method not in ("analytic", "monte_carlo"):
            raise ValidationError(f"method must be 'analytic' or 'monte_carlo', got {self.method!r}")
        self.gen_measures = [DistanceMeasure.parse(m).value for m in self.gen_measures]
        self.gex_measures = [DistanceMeasure.parse(m).value for m in self.gex_measures]
        for m in self.gen_measures:
            if not DistanceMeasure(m).is_genotype:
                raise ValidationError(f"{m} is not a genotype measure")
        for m in self.gex_measures:
            if DistanceMeasure(m).is_genotype:
                raise ValidationError(f"{m} is a genotype measure, not an expression measure")
        if self.min_features < 1 or self.max_features < self.min_features:
            raise ValidationError("need 1 <= min_features <= max_features")
        if self.join_on_id:
            self.id_column = True


def load_manifest(path: str | os.PathLike, overrides: dict[str, Any] | None = None) -> ScanManifest:
    """Read a JSON manifest; relative file paths resolve against its directory.

    ``overrides`` (typically CLI flags) win over file values; the seed falls
    back to the ``GRVTEST_SEED`` environment variable, then 0.
    """
    path = Path(path)
    cfg = json.loads(path.read_text())
    if isinstance(cfg.get("method"), dict):  # {"monte_carlo": 10000}
        (name, n), = cfg["method"].items()
        cfg["method"], cfg["n_perm"] = name, int(n)
    if "seed" not in cfg and os.environ.get(SEED_ENV):
        cfg["seed"] = int(os.environ[SEED_ENV])
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key in ("genotype_file", "expression_file", "pathway_map_file"):
        if key in cfg and not os.path.isabs(cfg[key]):
            cfg[key] = str(path.parent / cfg[key])
    known = {f.name for f in fields(ScanManifest)}
    unknown = set(cfg) - known
    if unknown:
        raise ValidationError(f"unknown manifest keys: {sorted(unknown)}")
    return ScanManifest(**cfg)


def read_pathway_map(path: str | os.PathLike) -> dict[str, dict[str, list[str]]]:
    """Pathway -> {"genotype": [...], "expression": [...]} column references.

    CSV rows are ``pathway_id, block, column`` (block is genotype/expression);
    JSON maps pathway ids to objects with those two keys. Column references are
    0-based integers or header names.
    """
    path = Path(path)
    text = path.read_text()
    out: dict[str, dict[str, list[str]]] = {}
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
        for pid, blocks in raw.items():
            out[str(pid)] = {b: [str(c) for c in blocks.get(b, [])] for b in ("genotype", "expression")}
        return out
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if rows and rows[0][0].strip().lower() in ("pathway_id", "pathway"):
        rows = rows[1:]
    for r in rows:
        if len(r) != 3:
            raise ValidationError(f"{path}: pathway map rows need 3 fields, got {r}")
        pid, block, col = (c.strip() for c in r)
        block = block.lower()
        if block not in ("genotype", "expression"):
            raise ValidationError(f"{path}: unknown block {block!r}")
        out.setdefault(pid, {"genotype": [], "expression": []})[block].append(col)
    return out


def _resolve(refs: list[str], header: list[str] | None, width: int, where: str) -> list[int]:
    idx = []
    for ref in refs:
        if ref.lstrip("-").isdigit():
            i = int(ref)
        elif header is not None and ref in header:
            i = header.index(ref)
        else:
            raise ValidationError(f"{where}: unknown column {ref!r}")
        if not 0 <= i < width:
            raise ValidationError(f"{where}: column index {i} out of range (width {width})")
        idx.append(i)
    return sorted(set(idx))


@dataclass
class ScanReport:
    config: dict
    results: list[dict]
    combined: list[dict]
    skipped: list[dict]

    @property
    def ranking(self) -> list[str]:
        return [c["pathway_id"] for c in sorted(self.combined, key=lambda c: c["rank"])]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, allow_nan=True) + "\n"


def _scan_pathway(task: tuple) -> tuple[str, list[dict]]:
    pid, x, y, gen_measures, gex_measures, method, n_perm, seed = task
    rows = []
    gx_cache: dict[str, Any] = {}
    for gen in gen_measures:
        for gex in gex_measures:
            row = {"pathway_id": pid, "gen_measure": gen, "gex_measure": gex,
                   "statistic": math.nan, "p_value": math.nan, "method": method,
                   "n_permutations": 0, "seed": None, "error": ""}
            try:
                if gen not in gx_cache:
                    gx_cache[gen] = gower_center(pairwise(GenotypeMatrix(x), gen))
                gx = gx_cache[gen]
                gy = gower_center(pairwise(RealMatrix(y), gex))
                if method == "analytic":
                    res = grv_pvalue_analytic(gx, gy)
                else:
                    res = grv_pvalue_permutation(gx, gy, n_perm, seed, stream=stream_id(pid, gen, gex))
                row.update(res.to_dict())
            except GRVError as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    return pid, rows


def run_scan(m: ScanManifest) -> ScanReport:
    gvals, gids, gheader = read_table(m.genotype_file, id_column=m.id_column)
    evals, eids, eheader = read_table(m.expression_file, id_column=m.id_column)
    if m.join_on_id:
        common = [i for i in gids if i in set(eids)]
        if not common:
            raise ValidationError("no sample ids shared by genotype and expression files")
        gpos = {s: i for i, s in enumerate(gids)}
        epos = {s: i for i, s in enumerate(eids)}
        gvals = gvals[[gpos[s] for s in common]]
        evals = evals[[epos[s] for s in common]]
    elif gvals.shape[0] != evals.shape[0]:
        raise ValidationError(
            f"sample counts differ: genotype file has {gvals.shape[0]}, expression file has {evals.shape[0]}"
        )
    GenotypeMatrix(gvals)  # validates 0/1/2 entries and reports rows with missing calls
    pmap = read_pathway_map(m.pathway_map_file)

    tasks, skipped = [], []
    for pid in sorted(pmap):
        g_idx = _resolve(pmap[pid]["genotype"], gheader, gvals.shape[1], f"pathway {pid}")
        e_idx = _resolve(pmap[pid]["expression"], eheader, evals.shape[1], f"pathway {pid}")
        ng, ne = len(g_idx), len(e_idx)
        if not (m.min_features <= ng <= m.max_features and m.min_features <= ne <= m.max_features):
            skipped.append({"pathway_id": pid, "n_genotype": ng, "n_expression": ne,
                            "reason": f"feature count outside [{m.min_features}, {m.max_features}]"})
            continue
        tasks.append((pid, gvals[:, g_idx].astype(np.int8), evals[:, e_idx],
                      m.gen_measures, m.gex_measures, m.method, m.n_perm, m.seed))

    if m.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=m.workers) as pool:
            done = dict(pool.map(_scan_pathway, tasks))
    else:
        done = dict(map(_scan_pathway, tasks))

    results, combined_rows = [], []
    for pid, *_ in tasks:
        rows = done[pid]
        results.extend(rows)
        ps = [r["p_value"] for r in rows if not r["error"]]
        failed = len(rows) - len(ps)
        for r in rows:
            if r["error"]:
                log.warning("pathway %s %s x %s failed: %s", pid, r["gen_measure"], r["gex_measure"], r["error"])
        if not ps:
            skipped.append({"pathway_id": pid, "n_genotype": None, "n_expression": None,
                            "reason": "every distance pair failed"})
            continue
        combined_rows.append({"pathway_id": pid, "combined_p": combine_maxp(ps),
                              "n_tests": len(ps), "n_failed": failed})
    ranked = rank_by_combined([c["pathway_id"] for c in combined_rows], [c["combined_p"] for c in combined_rows])
    rank = {pid: r for r, pid in enumerate(ranked.ids, start=1)}
    for c in combined_rows:
        c["rank"] = rank[c["pathway_id"]]
    combined_rows.sort(key=lambda c: c["rank"])
    skipped.sort(key=lambda s: s["pathway_id"])
    config = asdict(m)
    config.pop("workers")  # output must not depend on the worker count
    return ScanReport(config, results, combined_rows, skipped)


RESULT_COLUMNS = ["pathway_id", "gen_measure", "gex_measure", "statistic", "p_value",
                  "method", "n_permutations", "seed", "error"]


def write_report(report: ScanReport, out_dir: str | os.PathLike) -> None:
    """results.csv (long format), results.json, skipped.csv, combined.csv, ranking.txt."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def fmt(v):
        if v is None:
            return ""
        return repr(float(v)) if isinstance(v, float) else v

    with open(out / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in report.results:
            w.writerow([fmt(r[c]) for c in RESULT_COLUMNS])
    with open(out / "combined.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "pathway_id", "combined_p", "n_tests", "n_failed"])
        for c in report.combined:
            w.writerow([c["rank"], c["pathway_id"], fmt(c["combined_p"]), c["n_tests"], c["n_failed"]])
    with open(out / "skipped.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pathway_id", "n_genotype", "n_expression", "reason"])
        for s in report.skipped:
            w.writerow([s["pathway_id"], fmt(s["n_genotype"]), fmt(s["n_expression"]), s["reason"]])
    (out / "results.json").write_text(report.to_json())
    (out / "ranking.txt").write_text("".join(f"{pid}\n" for pid in report.ranking))

"""Synthetic eQTL-style paired data and Monte Carlo power / size estimation.

Genotypes: each SNP gets a minor allele frequency m ~ U(maf_low, maf_high) and
allele counts drawn with Hardy-Weinberg probabilities ((1-m)^2, 2m(1-m), m^2).
Expression: y_i = z_i 1_Q + e_i with z the per-sample allele total and
e_i ~ N_Q(mu, Sigma), mu_q ~ U(0, 1), Sigma ~ Wishart(df, I_Q). Null datasets
use y_i = e_i.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from .distances import DistanceMeasure, GenotypeMatrix, RealMatrix, pairwise_genotype, pairwise_real
from .errors import GRVError, ValidationError
from .inference import grv_pvalue_analytic, grv_pvalue_permutation, mantel_pvalue_permutation
from .matrices import gower_center
from .permutations import stream_id

__all__ = [
    "EqtlConfig",
    "PairedDataset",
    "PowerEstimate",
    "generate_eqtl",
    "dataset_rng",
    "simulate_pvalues",
    "estimate_power",
    "estimate_size",
    "write_report_csv",
    "write_report_json",
    "write_synthetic_cohort",
]

TestKind = Literal["grv_analytic", "grv_permutation", "mantel_permutation"]
TESTS: tuple[str, ...] = ("grv_analytic", "grv_permutation", "mantel_permutation")
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class EqtlConfig:
    n: int
    p: int = 2
    q: int = 10
    maf_range: tuple[float, float] = (0.1, 0.5)
    associated: bool = True
    seed: int = 0
    wishart_df: int | None = None  # None -> q + 1
    wishart_scale: float = 1.0
    redraw_per_dataset: bool = True

    def __post_init__(self) -> None:
        lo, hi = self.maf_range
        if not 0 < lo <= hi <= 0.5:
            raise ValidationError(f"maf_range must satisfy 0 < low <= high <= 0.5, got {self.maf_range}")
        if self.n < 3 or self.p < 1 or self.q < 1:
            raise ValidationError(f"need n >= 3, p >= 1, q >= 1 (got n={self.n}, p={self.p}, q={self.q})")
        if self.df < self.q:
            warnings.warn("Wishart df < q gives a singular covariance", stacklevel=2)

    @property
    def df(self) -> int:
        return self.q + 1 if self.wishart_df is None else self.wishart_df


@dataclass(frozen=True, eq=False)
class PairedDataset:
    genotypes: GenotypeMatrix
    expression: RealMatrix
    maf: NDArray[np.float64] = field(repr=False)
    mu: NDArray[np.float64] = field(repr=False)
    sigma: NDArray[np.float64] = field(repr=False)


@dataclass(frozen=True)
class PowerEstimate:
    mean_power: float
    sd: float
    runs: int
    datasets_per_run: int
    alpha: float
    skipped: int = 0
    per_run: tuple[float, ...] = ()

    @property
    def sd_defined(self) -> bool:
        return self.runs > 1


def dataset_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & _MASK64, spawn_key=key)))


def _draw_noise_params(cfg: EqtlConfig, rng: np.random.Generator) -> tuple[NDArray, NDArray]:
    mu = rng.uniform(0.0, 1.0, size=cfg.q)
    a = rng.normal(size=(cfg.df, cfg.q))
    sigma = cfg.wishart_scale * (a.T @ a)
    return mu, sigma


def generate_eqtl(
    cfg: EqtlConfig,
    rng: np.random.Generator | None = None,
    noise_params: tuple[NDArray, NDArray] | None = None,
) -> PairedDataset:
    """Draw one paired (genotype, expression) dataset.

    ``rng`` defaults to a generator seeded from ``cfg.seed``. ``noise_params``
    fixes (mu, Sigma) instead of drawing them.
    """
    if rng is None:
        rng = dataset_rng(cfg.seed)
    maf = rng.uniform(*cfg.maf_range, size=cfg.p)
    # Hardy-Weinberg: allele count ~ Binomial(2, m) has exactly these three probabilities.
    x = rng.binomial(2, np.broadcast_to(maf, (cfg.n, cfg.p))).astype(np.int8)
    mu, sigma = noise_params if noise_params is not None else _draw_noise_params(cfg, rng)
    # Sigma is PSD by construction; eigh-based factor tolerates df < q.
    lam, vec = np.linalg.eigh(sigma)
    factor = vec * np.sqrt(np.clip(lam, 0.0, None))
    e = mu + rng.standard_normal((cfg.n, cfg.q)) @ factor.T
    if cfg.associated:
        z = x.sum(axis=1).astype(float)
        y = z[:, None] + e
    else:
        y = e
    return PairedDataset(GenotypeMatrix(x), RealMatrix(y), maf, mu, sigma)


def _one_pvalue(args: tuple) -> float:
    cfg, gen, gex, test, seed, run, ds, n_perm, noise = args
    data = generate_eqtl(cfg, dataset_rng(seed, run, ds), noise)
    try:
        dx = pairwise_genotype(data.genotypes, gen)
        dy = pairwise_real(data.expression, gex)
        if test == "mantel_permutation":
            return mantel_pvalue_permutation(dx, dy, n_perm, seed, stream=stream_id("mantel", run, ds)).p_value
        gx, gy = gower_center(dx), gower_center(dy)
        if test == "grv_analytic":
            return grv_pvalue_analytic(gx, gy).p_value
        return grv_pvalue_permutation(gx, gy, n_perm, seed, stream=stream_id("grv", run, ds)).p_value
    except GRVError:
        return math.nan


def simulate_pvalues(
    cfg: EqtlConfig,
    gen_dist: DistanceMeasure | str,
    gex_dist: DistanceMeasure | str,
    test: TestKind = "grv_analytic",
    runs: int = 50,
    datasets_per_run: int = 50,
    seed: int | None = None,
    *,
    n_perm: int = 10_000,
    workers: int = 1,
) -> NDArray[np.float64]:
    """p-values of shape (runs, datasets_per_run); NaN marks skipped datasets.

    Dataset (r, d) is generated from the stream ``(seed, r, d)``, so results do
    not depend on ``workers``.
    """
    if test not in TESTS:
        raise ValidationError(f"unknown test {test!r}; expected one of {TESTS}")
    if runs < 1 or datasets_per_run < 1:
        raise ValidationError("runs and datasets_per_run must be at least 1")
    gen = DistanceMeasure.parse(gen_dist)
    gex = DistanceMeasure.parse(gex_dist)
    seed = cfg.seed if seed is None else seed
    jobs = []
    for r in range(runs):
        noise = None if cfg.redraw_per_dataset else _draw_noise_params(cfg, dataset_rng(seed, r, 2**32 - 1))
        jobs.extend((cfg, gen, gex, test, seed, r, d, n_perm, noise) for d in range(datasets_per_run))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one_pvalue, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        out = [_one_pvalue(j) for j in jobs]
    return np.array(out).reshape(runs, datasets_per_run)


def _summarise(pvals: NDArray[np.float64], alpha: float) -> PowerEstimate:
    ok = ~np.isnan(pvals)
    hits = np.where(ok, pvals <= alpha, False).sum(axis=1)
    denom = ok.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_run = hits / denom
    per_run = per_run[denom > 0]
    runs, ds = pvals.shape
    mean = float(per_run.mean()) if per_run.size else math.nan
    sd = float(per_run.std(ddof=1)) if per_run.size > 1 else 0.0
    return PowerEstimate(mean, sd, runs, ds, alpha, int((~ok).sum()), tuple(float(v) for v in per_run))


def estimate_power(
    cfg: EqtlConfig,
    gen_dist: DistanceMeasure | str,
    gex_dist: DistanceMeasure | str,
    test: TestKind = "grv_analytic",
    runs: int = 50,
    datasets_per_run: int = 50,
    alpha: float = 0.001,
    seed: int | None = None,
    *,
    n_perm: int = 10_000,
    workers: int = 1,
) -> PowerEstimate:
    """Mean and across-run sd of the fraction of p-values <= alpha.

    Datasets whose test raises a degenerate-input or numeric error are
    skipped and counted in ``skipped``.
    """
    if not 0 < alpha <= 1:
        raise ValidationError("alpha must lie in (0, 1]")
    pv = simulate_pvalues(cfg, gen_dist, gex_dist, test, runs, datasets_per_run, seed,
                          n_perm=n_perm, workers=workers)
    return _summarise(pv, alpha)


def estimate_size(
    cfg: EqtlConfig,
    levels: Sequence[float] = (0.01, 0.05, 0.10),
    runs: int = 100,
    datasets_per_run: int = 200,
    seed: int | None = None,
    *,
    gen_dist: DistanceMeasure | str = DistanceMeasure.IBS,
    gex_dist: DistanceMeasure | str = DistanceMeasure.MAHALANOBIS,
    test: TestKind = "grv_analytic",
    n_perm: int = 10_000,
    workers: int = 1,
) -> dict[float, PowerEstimate]:
    """Rejection rates under the null generator, one estimate per level."""
    null_cfg = replace(cfg, associated=False)
    pv = simulate_pvalues(null_cfg, gen_dist, gex_dist, test, runs, datasets_per_run, seed,
                          n_perm=n_perm, workers=workers)
    return {float(a): _summarise(pv, float(a)) for a in levels}


REPORT_COLUMNS = ["gen_dist", "gex_dist", "test", "N", "alpha", "power", "sd",
                  "runs", "datasets_per_run", "skipped", "sd_flag"]


def report_row(cfg: EqtlConfig, gen, gex, test: str, est: PowerEstimate) -> dict:
    return {
        "gen_dist": DistanceMeasure.parse(gen).value,
        "gex_dist": DistanceMeasure.parse(gex).value,
        "test": test,
        "N": cfg.n,
        "alpha": est.alpha,
        "power": est.mean_power,
        "sd": est.sd,
        "runs": est.runs,
        "datasets_per_run": est.datasets_per_run,
        "skipped": est.skipped,
        "sd_flag": "" if est.sd_defined else "single-run",
    }


def write_report_csv(path: str | os.PathLike, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in REPORT_COLUMNS})


def write_report_json(path: str | os.PathLike, rows: Sequence[dict], cfg: EqtlConfig) -> None:
    meta = asdict(cfg)
    meta["wishart_df_resolved"] = cfg.df
    with open(path, "w") as fh:
        json.dump({"config": meta, "rows": list(rows)}, fh, indent=2)


def write_synthetic_cohort(
    out_dir: str | os.PathLike,
    *,
    n: int = 60,
    n_pathways: int = 20,
    n_planted: int = 5,
    snps_per_pathway: int = 6,
    genes_per_pathway: int = 10,
    seed: int = 0,
    gen_measures: Sequence[str] = ("IBS", "SokalSneath"),
    gex_measures: Sequence[str] = ("Euclidean", "Mahalanobis"),
) -> tuple[str, list[str]]:
    """Write a multi-pathway cohort and a scan manifest for it.

    Each pathway is an independent draw from :func:`generate_eqtl` on its own
    SNP and gene columns; ``n_planted`` randomly chosen pathways are drawn
    with the association switched on. Returns the manifest path and the
    planted pathway ids.
    """
    if not 0 <= n_planted <= n_pathways:
        raise ValidationError("need 0 <= n_planted <= n_pathways")
    out = os.fspath(out_dir)
    os.makedirs(out, exist_ok=True)
    rng = dataset_rng(seed, 0xC0)
    pids = [f"PW{i:03d}" for i in range(n_pathways)]
    planted = sorted(rng.choice(pids, size=n_planted, replace=False).tolist())
    g_blocks, e_blocks, pmap = [], [], {}
    for i, pid in enumerate(pids):
        cfg = EqtlConfig(n=n, p=snps_per_pathway, q=genes_per_pathway,
                         associated=pid in planted, seed=seed)
        data = generate_eqtl(cfg, dataset_rng(seed, 0xC1, i))
        g0 = i * snps_per_pathway
        e0 = i * genes_per_pathway
        pmap[pid] = {"genotype": [f"snp{j}" for j in range(g0, g0 + snps_per_pathway)],
                     "expression": [f"gene{j}" for j in range(e0, e0 + genes_per_pathway)]}
        g_blocks.append(data.genotypes.values)
        e_blocks.append(data.expression.values)
    g = np.hstack(g_blocks)
    e = np.hstack(e_blocks)
    ids = [f"S{i:04d}" for i in range(n)]
    with open(os.path.join(out, "genotypes.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample"] + [f"snp{j}" for j in range(g.shape[1])])
        w.writerows([s] + row.tolist() for s, row in zip(ids, g))
    with open(os.path.join(out, "expression.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample"] + [f"gene{j}" for j in range(e.shape[1])])
        w.writerows([s] + [repr(float(v)) for v in row] for s, row in zip(ids, e))
    with open(os.path.join(out, "pathways.json"), "w") as fh:
        json.dump(pmap, fh, indent=1)
    manifest = {
        "genotype_file": "genotypes.csv",
        "expression_file": "expression.csv",
        "pathway_map_file": "pathways.json",
        "gen_measures": list(gen_measures),
        "gex_measures": list(gex_measures),
        "method": "analytic",
        "seed": seed,
        "id_column": True,
        "join_on_id": True,
    }
    path = os.path.join(out, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return path, planted

"""Seeded Monte Carlo experiments on the Gaussian reference model.

Each replication draws a fresh sample, fits both conditional margins with
the smoothed local-linear estimator, and evaluates the empirical copula of
the estimated and of the exact (oracle) pseudo-observations at a fixed
point of the unit square. Replications are independent tasks: every one
derives its own RNG stream from (master_seed, n, rep_index), so results
are bitwise reproducible for any worker count, and aggregation follows
replication index.

Failed replications (too many degenerate margin evaluations) are recorded
with a NaN copula value and excluded from summaries, never dropped
silently; totals always satisfy succeeded + failed = R.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import ndtri
from scipy.stats import kstest, pearsonr

from .gaussref import GaussianCopulaSpec, gaussian_copula, limit_sigma, sample_copula_triples
from .loclin import Bandwidths, ConditionalCdfFit, NoCrossing
from .ranks import PseudoObservations, empirical_copula

__all__ = [
    "ExperimentConfig",
    "ReplicationRecord",
    "ProximityRow",
    "NormalityRow",
    "NormalityResult",
    "RateRow",
    "run_replication",
    "run_grid",
    "experiment_proximity",
    "experiment_normality",
    "rate_scan",
    "load_config",
    "paper_scale",
    "emit_records_csv",
    "read_records_csv",
    "default_workers",
]

WORKERS_ENV_VAR = "CONDCOPULA_WORKERS"

# Fraction of margin evaluations that may hit a degenerate design before
# the whole replication is marked failed.
_DEGENERATE_TOLERANCE = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    """Description of one Monte Carlo run.

    The bandwidth rule is h = bandwidth_c * n ** bandwidth_exponent, used
    for both directions and both margins. Desk-scale defaults keep a full
    run in the minutes range; ``paper_scale`` switches to the large design
    (5000 replications, sample sizes up to 10000, same h = 0.5 n^(-1/5)).
    """

    rho1X: float
    rho2X: float
    rho12: float
    u: tuple[float, float] = (0.5, 0.7)
    n_grid: tuple[int, ...] = (250, 500, 1000, 2000)
    replications: int = 200
    bandwidth_c: float = 0.5
    bandwidth_exponent: float = -0.2
    master_seed: int = 1729
    gamma: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(v) for v in self.u))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if len(self.u) != 2 or not all(0.0 < v < 1.0 for v in self.u):
            raise ValueError(f"u must be a point of the open unit square, got {self.u}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not self.n_grid or any(n < 10 for n in self.n_grid):
            raise ValueError(f"all sample sizes must be >= 10, got {self.n_grid}")
        if not 0.0 < self.gamma < 0.5:
            raise ValueError(f"gamma must lie in (0, 0.5), got {self.gamma}")
        if min(self.bandwidth(n) for n in self.n_grid) <= 0.0:
            raise ValueError("bandwidth rule must yield h > 0 on the whole grid")
        self.spec()  # validates positive definiteness

    def spec(self) -> GaussianCopulaSpec:
        return GaussianCopulaSpec(rho1X=self.rho1X, rho2X=self.rho2X, rho12=self.rho12)

    def bandwidth(self, n: int) -> float:
        return self.bandwidth_c * float(n) ** self.bandwidth_exponent


def paper_scale(cfg: ExperimentConfig) -> ExperimentConfig:
    """Full-scale design behind the --paper flag; hours, not minutes."""
    return replace(cfg, replications=5000, n_grid=(100, 200, 500, 1000, 2000, 5000, 10000))


@dataclass(frozen=True)
class ReplicationRecord:
    """Per-replication outputs of the estimator-versus-oracle comparison."""

    n: int
    rep_index: int
    seed: int
    c_hat: float
    c_oracle: float
    degenerate_count: int
    failed: bool
    sup_margin_error: float | None = None


def replication_seed(master_seed: int, n: int, rep_index: int) -> np.random.SeedSequence:
    """Counter-based stream split keyed by (master seed, n, replication)."""
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(n, rep_index))


def run_replication(cfg: ExperimentConfig, n: int, rep_index: int,
                    with_sup_error: bool = False) -> ReplicationRecord:
    """Sample, fit both margins, and evaluate estimator and oracle copulas.

    Degenerate margin evaluations are counted; when their fraction exceeds
    1% of the 2n evaluations the replication is marked failed (c_hat NaN).
    Below the threshold the affected pairs are left out of the estimated
    copula, and the count is recorded.
    """
    ss = replication_seed(cfg.master_seed, n, rep_index)
    seed_id = int(ss.generate_state(1, np.uint64)[0])
    rng = np.random.default_rng(ss)
    spec = cfg.spec()
    x, y1, y2 = sample_copula_triples(spec, n, rng)

    h = cfg.bandwidth(n)
    bw = Bandwidths(h1=h, h2=h)
    fit1 = ConditionalCdfFit(x, y1, bw)
    fit2 = ConditionalCdfFit(x, y2, bw)
    v1 = fit1.cdf(y1, x, on_degenerate="nan")
    v2 = fit2.cdf(y2, x, on_degenerate="nan")

    o1 = spec.margin(1).cdf(y1, x)
    o2 = spec.margin(2).cdf(y2, x)
    u1, u2 = cfg.u
    c_oracle = empirical_copula(PseudoObservations(o1, o2, "oracle"), u1, u2)

    degenerate = int(np.isnan(v1).sum() + np.isnan(v2).sum())
    failed = degenerate > _DEGENERATE_TOLERANCE * 2 * n
    if failed:
        c_hat = float("nan")
    else:
        keep = ~(np.isnan(v1) | np.isnan(v2))
        c_hat = empirical_copula(PseudoObservations(v1[keep], v2[keep], "estimated"), u1, u2)

    sup_err = None
    if with_sup_error and not failed:
        sup_err = _sup_cdf_error(cfg, fit1, spec.margin(1))

    return ReplicationRecord(n=n, rep_index=rep_index, seed=seed_id, c_hat=c_hat,
                             c_oracle=c_oracle, degenerate_count=degenerate,
                             failed=failed, sup_margin_error=sup_err)


# -- diagnostic lattices ---------------------------------------------------

def _lattices(cfg: ExperimentConfig):
    g = cfg.gamma
    x_lat = np.linspace(g, 1.0 - g, 9)
    y_levels = np.linspace(g, 1.0 - g, 33)
    u_lat = np.linspace(g, 1.0 - g, 17)
    return x_lat, y_levels, u_lat


def _sup_cdf_error(cfg, fit, margin) -> float:
    """max |F_hat - F| over the diagnostic (x, y) lattice."""
    x_lat, y_levels, _ = _lattices(cfg)
    worst = 0.0
    for xv in x_lat:
        ys = margin.quantile(y_levels, np.full_like(y_levels, xv))
        est = fit.cdf(ys, np.full_like(ys, xv), on_degenerate="nan")
        truth = margin.cdf(ys, np.full_like(ys, xv))
        worst = max(worst, float(np.nanmax(np.abs(est - truth))))
    return worst


def _sup_quantile_error(cfg, fit, margin) -> float:
    """max |F_hat^- - F^-| over the diagnostic (x, u) lattice."""
    x_lat, _, u_lat = _lattices(cfg)
    worst = 0.0
    for xv in x_lat:
        try:
            est = fit.quantile(u_lat, xv)
        except NoCrossing:
            return float("nan")
        truth = margin.quantile(u_lat, np.full_like(u_lat, xv))
        worst = max(worst, float(np.max(np.abs(est - truth))))
    return worst


# -- experiment drivers ----------------------------------------------------

def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV_VAR)
    if env:
        workers = int(env)
        if workers < 1:
            raise ValueError(f"{WORKERS_ENV_VAR} must be >= 1, got {workers}")
        return workers
    return os.cpu_count() or 1


def _run_task(args):
    cfg, n, rep, with_sup = args
    return run_replication(cfg, n, rep, with_sup_error=with_sup)


def _map_tasks(tasks, workers: int):
    if workers == 1 or len(tasks) <= 1:
        return [_run_task(t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_task, tasks, chunksize=chunk))


def run_grid(cfg: ExperimentConfig, workers: int | None = None,
             with_sup_error: bool = False) -> list[ReplicationRecord]:
    """All replications for every sample size in the grid, index-ordered."""
    workers = default_workers() if workers is None else workers
    tasks = [(cfg, n, rep, with_sup_error)
             for n in cfg.n_grid for rep in range(cfg.replications)]
    return _map_tasks(tasks, workers)


@dataclass(frozen=True)
class ProximityRow:
    n: int
    corr: float
    gap_scaled: float  # sqrt(n) * mean |c_hat - c_oracle|
    failed: int


def proximity_summary(cfg: ExperimentConfig, records) -> list[ProximityRow]:
    rows = []
    for n in cfg.n_grid:
        ok = [r for r in records if r.n == n and not r.failed]
        failed = sum(1 for r in records if r.n == n and r.failed)
        ch = np.array([r.c_hat for r in ok])
        co = np.array([r.c_oracle for r in ok])
        corr = float(pearsonr(ch, co).statistic) if ok else float("nan")
        gap = float(math.sqrt(n) * np.mean(np.abs(ch - co))) if ok else float("nan")
        rows.append(ProximityRow(n=n, corr=corr, gap_scaled=gap, failed=failed))
    return rows


def experiment_proximity(cfg: ExperimentConfig, workers: int | None = None):
    """Estimator-versus-oracle proximity across the sample-size grid.

    Returns (rows, records); failed replications are excluded from the
    summary statistics with their count reported per row.
    """
    if len(cfg.n_grid) < 2:
        raise ValueError("proximity experiment needs at least 2 sample sizes")
    records = run_grid(cfg, workers=workers)
    return proximity_summary(cfg, records), records


@dataclass(frozen=True)
class NormalityRow:
    n: int
    sd: float        # sd of sqrt(n) (c_hat - C(u))
    ks: float        # KS statistic of standardized values vs N(0, 1)
    ks_pvalue: float
    failed: int


@dataclass(frozen=True)
class NormalityResult:
    c_true: float
    sigma_limit: float
    rows: list[NormalityRow]
    qq: dict[int, np.ndarray]    # per n: (R_ok, 2) theoretical / empirical
    hist: dict[int, tuple[np.ndarray, np.ndarray]]  # per n: (edges, counts)


def normality_summary(cfg: ExperimentConfig, records) -> NormalityResult:
    spec = cfg.spec()
    u1, u2 = cfg.u
    c_true = gaussian_copula(u1, u2, spec.rho12_given_X)
    sigma = limit_sigma(cfg.u, spec.rho12_given_X)
    rows, qq, hist = [], {}, {}
    for n in cfg.n_grid:
        ok = [r for r in records if r.n == n and not r.failed]
        failed = sum(1 for r in records if r.n == n and r.failed)
        z = np.sqrt(n) * (np.array([r.c_hat for r in ok]) - c_true)
        sd = float(np.std(z, ddof=1)) if len(ok) > 1 else float("nan")
        standardized = z / sigma
        res = kstest(standardized, "norm")
        rows.append(NormalityRow(n=n, sd=sd, ks=float(res.statistic),
                                 ks_pvalue=float(res.pvalue), failed=failed))
        emp = np.sort(z)
        levels = (np.arange(1, emp.size + 1) - 0.5) / emp.size
        qq[n] = np.column_stack([sigma * ndtri(levels), emp])
        counts, edges = np.histogram(standardized, bins=np.linspace(-4.0, 4.0, 41))
        hist[n] = (edges, counts)
    return NormalityResult(c_true=c_true, sigma_limit=sigma, rows=rows, qq=qq, hist=hist)


def experiment_normality(cfg: ExperimentConfig, workers: int | None = None):
    """Sampling-distribution summaries of sqrt(n) (C_hat(u) - C(u)).

    Returns (NormalityResult, records).
    """
    records = run_grid(cfg, workers=workers)
    return normality_summary(cfg, records), records


@dataclass(frozen=True)
class RateRow:
    n: int
    median_sup_cdf_error: float
    median_sup_quantile_error: float


def _rate_task(args):
    cfg, n, rep, use_oracle = args
    ss = replication_seed(cfg.master_seed, n, rep)
    rng = np.random.default_rng(ss)
    spec = cfg.spec()
    x, y1, _ = sample_copula_triples(spec, n, rng)
    margin = spec.margin(1)
    if use_oracle:
        return 0.0, 0.0  # the estimate IS the truth; both sups vanish
    h = cfg.bandwidth(n)
    fit = ConditionalCdfFit(x, y1, Bandwidths(h1=h, h2=h))
    return _sup_cdf_error(cfg, fit, margin), _sup_quantile_error(cfg, fit, margin)


def rate_scan(cfg: ExperimentConfig, workers: int | None = None,
              margins: str = "estimated") -> list[RateRow]:
    """Median uniform errors of the fitted margin across the size grid.

    For each n, the sup of |F_hat - F| over the diagnostic (x, y) lattice
    and of |F_hat^- - F^-| over the (x, u) lattice is computed per
    replication; the rows report medians across replications.
    ``margins="oracle"`` short-circuits the fit with the exact margins.
    """
    if margins not in ("estimated", "oracle"):
        raise ValueError(f"margins must be 'estimated' or 'oracle', got {margins!r}")
    workers = default_workers() if workers is None else workers
    rows = []
    for n in cfg.n_grid:
        tasks = [(cfg, n, rep, margins == "oracle") for rep in range(cfg.replications)]
        if workers == 1 or len(tasks) <= 1:
            sups = [_rate_task(t) for t in tasks]
        else:
            chunk = max(1, len(tasks) // (workers * 8))
            with ProcessPoolExecutor(max_workers=workers) as pool:
                sups = list(pool.map(_rate_task, tasks, chunksize=chunk))
        cdf_sups = np.array([s[0] for s in sups])
        q_sups = np.array([s[1] for s in sups])
        rows.append(RateRow(n=n, median_sup_cdf_error=float(np.median(cdf_sups)),
                            median_sup_quantile_error=float(np.median(q_sups))))
    return rows


# -- config and CSV plumbing ------------------------------------------------

_REQUIRED_FIELDS = ("rho1X", "rho2X", "rho12")


def load_config(path) -> ExperimentConfig:
    """Read an ExperimentConfig from a JSON file.

    The correlation fields are required; everything else falls back to the
    desk-scale defaults. Unknown or missing fields raise errors naming the
    field.
    """
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"config {path} must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    for key in raw:
        if key not in known:
            raise ValueError(f"unknown config field '{key}' in {path}")
    for key in _REQUIRED_FIELDS:
        if key not in raw:
            raise ValueError(f"missing required config field '{key}' in {path}")
    return ExperimentConfig(**raw)


_RECORD_HEADER = ["n", "rep_index", "seed", "c_hat", "c_oracle",
                  "degenerate_count", "failed", "sup_margin_error"]


def emit_records_csv(records, path):
    """Write replication records; floats carry 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_RECORD_HEADER)
        for r in records:
            sup = "" if r.sup_margin_error is None else f"{r.sup_margin_error:.17g}"
            writer.writerow([r.n, r.rep_index, r.seed, f"{r.c_hat:.17g}",
                             f"{r.c_oracle:.17g}", r.degenerate_count,
                             int(r.failed), sup])


def read_records_csv(path) -> list[ReplicationRecord]:
    """Inverse of ``emit_records_csv``; round-trips values bit for bit."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _RECORD_HEADER:
            raise ValueError(f"unexpected replication CSV header in {path}: {reader.fieldnames}")
        for row in reader:
            records.append(ReplicationRecord(
                n=int(row["n"]), rep_index=int(row["rep_index"]), seed=int(row["seed"]),
                c_hat=float(row["c_hat"]), c_oracle=float(row["c_oracle"]),
                degenerate_count=int(row["degenerate_count"]),
                failed=bool(int(row["failed"])),
                sup_margin_error=(None if row["sup_margin_error"] == ""
                                  else float(row["sup_margin_error"])),
            ))
    return records


def emit_proximity_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "corr", "gap", "failed"])
        for r in rows:
            writer.writerow([r.n, f"{r.corr:.17g}", f"{r.gap_scaled:.17g}", r.failed])


def emit_normality_csv(result: NormalityResult, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "sd", "ks", "ks_pvalue", "failed"])
        for r in result.rows:
            writer.writerow([r.n, f"{r.sd:.17g}", f"{r.ks:.17g}",
                             f"{r.ks_pvalue:.17g}", r.failed])


def emit_qq_csv(result: NormalityResult, n: int, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theoretical", "empirical"])
        for theo, emp in result.qq[n]:
            writer.writerow([f"{theo:.17g}", f"{emp:.17g}"])


def emit_rates_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "median_sup_cdf_error", "median_sup_quantile_error"])
        for r in rows:
            writer.writerow([r.n, f"{r.median_sup_cdf_error:.17g}",
                             f"{r.median_sup_quantile_error:.17g}"])

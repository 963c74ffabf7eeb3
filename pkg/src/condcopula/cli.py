"""Command-line entry points.

Subcommands:
  sigma     print the limit standard deviation at one point of the square
  simulate  run the proximity and normality Monte Carlo experiments
  estimate  fit both margins on a CSV dataset and evaluate the copula
  diagnose  rate scan and monotonicity reports for the reference model

Heavy imports happen inside each handler so that the cheap subcommands
stay fast. Worker count comes from the CONDCOPULA_WORKERS environment
variable (default: all CPUs).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def _add_config_args(p):
    p.add_argument("--config", type=Path, default=None,
                   help="JSON experiment config; defaults to the built-in Gaussian setup")
    p.add_argument("--seed", type=int, default=None, help="override the master seed")
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory for CSVs")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: CONDCOPULA_WORKERS or CPU count)")


def _load_cfg(args):
    from dataclasses import replace

    from .harness import ExperimentConfig, load_config, paper_scale

    if args.config is not None:
        cfg = load_config(args.config)
    else:
        # Reference correlations under which the conditional copula is
        # Gaussian with parameter 0.5.
        cfg = ExperimentConfig(rho1X=0.4, rho2X=-0.2, rho12=0.3689989)
    if getattr(args, "paper", False):
        cfg = paper_scale(cfg)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def cmd_sigma(args) -> int:
    from .gaussref import limit_sigma

    print(f"{limit_sigma((args.u1, args.u2), args.rho):.6f}")
    return 0


def cmd_simulate(args) -> int:
    from . import harness

    cfg = _load_cfg(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    records = harness.run_grid(cfg, workers=args.workers)
    harness.emit_records_csv(records, out / "replications.csv")
    if len(cfg.n_grid) >= 2:
        rows = harness.proximity_summary(cfg, records)
        harness.emit_proximity_csv(rows, out / "proximity.csv")
        for r in rows:
            print(f"n={r.n}: corr={r.corr:.4f} sqrt(n)*gap={r.gap_scaled:.4f} failed={r.failed}")
    result = harness.normality_summary(cfg, records)
    harness.emit_normality_csv(result, out / "normality.csv")
    for n in cfg.n_grid:
        harness.emit_qq_csv(result, n, out / f"qq_{n}.csv")
    print(f"C(u) = {result.c_true:.6f}, limit sd = {result.sigma_limit:.6f}")
    for r in result.rows:
        print(f"n={r.n}: sd={r.sd:.4f} KS={r.ks:.4f} (p={r.ks_pvalue:.3f}) failed={r.failed}")
    print(f"wrote CSVs to {out}")
    return 0


def cmd_estimate(args) -> int:
    import numpy as np

    from .loclin import Bandwidths, ConditionalCdfFit
    from .ranks import empirical_copula, pseudo_obs, pseudo_obs_to_csv, read_xyy_csv

    x, y1, y2 = read_xyy_csv(args.data)
    n = x.size
    if args.h1 is not None or args.h2 is not None:
        if args.h1 is None or args.h2 is None:
            print("error: provide both --h1 and --h2, or neither", file=sys.stderr)
            return 2
        bw = Bandwidths(h1=args.h1, h2=args.h2)
    else:
        h = args.bandwidth_c * n ** args.bandwidth_exponent
        bw = Bandwidths(h1=h, h2=h)
    span = float(np.max(x) - np.min(x))
    if bw.h1 >= span / 2:
        print(f"warning: h1={bw.h1:.4g} >= half the covariate range {span:.4g}; "
              "the fit degenerates toward a single global line", file=sys.stderr)
    fit1 = ConditionalCdfFit(x, y1, bw)
    fit2 = ConditionalCdfFit(x, y2, bw)
    pobs = pseudo_obs(x, y1, y2, fit1, fit2, provenance="estimated")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    dest = args.out_dir / "pseudo_obs.csv"
    pseudo_obs_to_csv(pobs, dest)
    c = empirical_copula(pobs, args.u1, args.u2)
    print(f"n={n} h1={bw.h1:.6g} h2={bw.h2:.6g}")
    print(f"C_n({args.u1}, {args.u2}) = {c:.6f}")
    print(f"wrote {dest}")
    return 0


def cmd_diagnose(args) -> int:
    import numpy as np

    from . import harness
    from .loclin import Bandwidths, ConditionalCdfFit, monotonicity_reports_to_csv
    from .gaussref import sample_copula_triples

    cfg = _load_cfg(args)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = harness.rate_scan(cfg, workers=args.workers)
    harness.emit_rates_csv(rows, out / "rates.csv")
    for r in rows:
        print(f"n={r.n}: median sup|F_hat-F|={r.median_sup_cdf_error:.4f} "
              f"median sup|Q_hat-Q|={r.median_sup_quantile_error:.4f}")
    # Monotonicity report on one fresh sample at the largest grid size.
    n = max(cfg.n_grid)
    rng = np.random.default_rng(harness.replication_seed(cfg.master_seed, n, 0))
    x, y1, _ = sample_copula_triples(cfg.spec(), n, rng)
    h = cfg.bandwidth(n)
    fit = ConditionalCdfFit(x, y1, Bandwidths(h1=h, h2=h))
    band = (cfg.gamma, 1.0 - cfg.gamma)
    reports = [fit.monotonicity_check(xv, band)
               for xv in np.linspace(cfg.gamma, 1.0 - cfg.gamma, 9)]
    monotonicity_reports_to_csv(reports, out / "monotonicity.csv")
    flagged = sum(r.violation for r in reports)
    print(f"monotonicity: {flagged}/{len(reports)} grid points flagged")
    print(f"wrote CSVs to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condcopula",
        description="Conditional-copula estimation and Monte Carlo experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sigma", help="limit standard deviation of the copula error process")
    p.add_argument("--u1", type=float, required=True)
    p.add_argument("--u2", type=float, required=True)
    p.add_argument("--rho", type=float, required=True)
    p.set_defaults(handler=cmd_sigma)

    p = sub.add_parser("simulate", help="proximity and normality experiments")
    _add_config_args(p)
    p.add_argument("--paper", action="store_true",
                   help="full-scale design (5000 replications, n up to 10000)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("estimate", help="fit margins on a CSV dataset (header x,y1,y2)")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--u1", type=float, default=0.5)
    p.add_argument("--u2", type=float, default=0.7)
    p.add_argument("--h1", type=float, default=None)
    p.add_argument("--h2", type=float, default=None)
    p.add_argument("--bandwidth-c", type=float, default=0.5)
    p.add_argument("--bandwidth-exponent", type=float, default=-0.2)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.set_defaults(handler=cmd_estimate)

    p = sub.add_parser("diagnose", help="rate scan and monotonicity reports")
    _add_config_args(p)
    p.set_defaults(handler=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())

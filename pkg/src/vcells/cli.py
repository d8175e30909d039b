"""Command-line front end: run experiments, inspect dendrograms, oracle checks."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .clustering import affiliate_users, format_dendrogram, hierarchical_cluster
from .config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    load_config,
    solver_options,
    system_params,
)
from .evaluation import (
    grid_oracle_rate,
    network_sum_rate,
    run_experiment,
    solve_partition,
)
from .network import generate_network
from .report import write_results_csv, write_summary_csv, write_svg_chart

ORACLE_MAX_BS = 2
ORACLE_MAX_USERS = 3
ORACLE_GRID_LEVELS = 50


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    rows, summary = run_experiment(cfg, jobs=jobs)
    write_results_csv(out / "results.csv", rows, precision=args.precision)
    write_summary_csv(out / "summary.csv", summary, precision=args.precision)
    write_svg_chart(out / "sumrate_vs_v.svg", summary)
    bad = sum(r.total_cells - r.converged_cells for r in rows)
    if bad:
        print(f"warning: {bad} cell solves did not converge within iteration caps "
              f"(rates still reported)", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {out / 'results.csv'}")
    return 0


def cmd_dendrogram(args) -> int:
    cfg = _load(args)
    params = system_params(cfg)
    instance = generate_network(params, cfg.n_bs, cfg.n_users, cfg.base_seed)
    for line in format_dendrogram(hierarchical_cluster(instance.bs_positions)):
        print(line)
    return 0


def cmd_oracle(args) -> int:
    cfg = _load(args)
    if cfg.n_bs > ORACLE_MAX_BS or cfg.n_users > ORACLE_MAX_USERS:
        print(
            f"oracle refuses instances larger than {ORACLE_MAX_BS} BSs / "
            f"{ORACLE_MAX_USERS} users (got {cfg.n_bs} BSs, {cfg.n_users} users); "
            f"the assignment-times-grid enumeration would be intractable",
            file=sys.stderr,
        )
        return 2
    params = system_params(cfg)
    instance = generate_network(params, cfg.n_bs, cfg.n_users, cfg.base_seed)
    opts = solver_options(cfg)
    oracle = grid_oracle_rate(instance, levels=ORACLE_GRID_LEVELS)
    print(f"oracle rate={oracle:.6g} bit/s (grid levels={ORACLE_GRID_LEVELS})")
    whole = affiliate_users((tuple(range(cfg.n_bs)),), instance)
    for scheme in cfg.schemes:
        sol = solve_partition(whole, instance, scheme, cfg.delta_bps, opts)
        rate = network_sum_rate(sol, instance)
        print(f"scheme={scheme} rate={rate:.6g} ratio={rate / oracle:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vcells",
        description="Virtual-cell uplink resource allocation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")

    run_p = sub.add_parser("run", help="run the Monte Carlo experiment")
    common(run_p)
    run_p.add_argument("--out", default="out", help="output directory (default: out)")
    run_p.add_argument("--jobs", type=int, default=0,
                       help="parallel worker processes (default: all cores)")
    run_p.add_argument("--precision", type=int, default=6,
                       help="significant digits in CSV output (default: 6)")
    run_p.set_defaults(func=cmd_run)

    dend_p = sub.add_parser("dendrogram", help="print the BS merge history")
    common(dend_p)
    dend_p.set_defaults(func=cmd_dendrogram)

    oracle_p = sub.add_parser("oracle", help="compare schemes against a brute-force grid oracle")
    common(oracle_p)
    oracle_p.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

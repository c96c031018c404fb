"""Command-line front end: single runs, seed batches, and plots."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .scenario import ScenarioError, builtin_scenario_names, resolve_scenario
from .simulation import run_batch, run_scenario


def _parse_seeds(text: str) -> list[int]:
    """Seed list syntax: "7", "0..49", or "3,5,9"."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        seeds = list(range(int(lo), int(hi) + 1))
    elif "," in text:
        seeds = [int(tok) for tok in text.split(",") if tok.strip()]
    else:
        seeds = [int(text)] if text else []
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="carriersim",
        description="Drone-carrier mission simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    names = ", ".join(builtin_scenario_names())
    run_p = sub.add_parser("run", help="run one seeded mission")
    run_p.add_argument(
        "--scenario",
        required=True,
        help=f"builtin name ({names}) or path to a scenario YAML",
    )
    run_p.add_argument("--seed", type=int, default=None, help="master seed")
    run_p.add_argument("--out", default=None, help="output directory for logs")
    run_p.add_argument(
        "--max-sim-s", type=float, default=2400.0, help="simulated-time cap [s]"
    )

    batch_p = sub.add_parser("batch", help="run a batch of seeds")
    batch_p.add_argument("--scenario", required=True)
    batch_p.add_argument(
        "--seeds",
        required=True,
        type=_parse_seeds,
        help='seed set: "0..49", "3,5,9", or a single integer',
    )
    batch_p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    batch_p.add_argument("--out", default=None, help="root directory for per-seed logs")
    batch_p.add_argument("--max-sim-s", type=float, default=2400.0)

    plot_p = sub.add_parser("plot", help="render figures from a run directory")
    plot_p.add_argument("--dir", required=True, help="run output directory")
    return parser


def _cmd_run(args) -> int:
    scenario = resolve_scenario(args.scenario)
    report = run_scenario(
        scenario, seed=args.seed, out_dir=args.out, max_sim_s=args.max_sim_s
    )
    print(
        f"{report.scenario} seed={report.seed}: {report.outcome} "
        f"after {report.duration_s:.1f} s sim "
        f"({report.wall_time_s:.1f} s wall), final phase {report.final_phase}"
    )
    if report.docked:
        print(f"  docked at t={report.docking_time_s:.1f} s")
    if report.objects_delivered:
        print(f"  objects handled: {report.objects_delivered}")
    if report.landing_errors_m:
        worst = max(report.landing_errors_m)
        print(f"  landings: {len(report.landing_errors_m)} (worst {worst:.3f} m)")
    if args.out:
        print(f"  logs: {args.out}")
    return 0 if report.success else 1


def _cmd_batch(args) -> int:
    scenario = resolve_scenario(args.scenario)
    reports, agg = run_batch(
        scenario,
        args.seeds,
        jobs=max(args.jobs, 1),
        out_root=args.out,
        max_sim_s=args.max_sim_s,
    )
    for r in reports:
        print(f"seed {r.seed}: {r.outcome} ({r.duration_s:.1f} s sim)")
    print(json.dumps(agg, sort_keys=True, indent=2))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(
            os.path.join(args.out, "aggregate.json"), "w", encoding="utf-8"
        ) as fh:
            json.dump(agg, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return 0 if len(reports) == len(args.seeds) else 1


def _cmd_plot(args) -> int:
    from .plotting import render_run_plots

    written = render_run_plots(args.dir)
    for path in written:
        print(path)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "batch":
            return _cmd_batch(args)
        return _cmd_plot(args)
    except (ScenarioError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end: analyze | optimize | simulate | sweep.

All outputs are RFC-4180 CSV, UTF-8, '.' decimal separator, 9 significant
digits.  A leading '# sagin-uplink ...' timestamp comment is written
unless --no-timestamp is given, so identical inputs and seeds reproduce
byte-identical files with the flag set.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from .config import ConfigValidationError, Scenario, default_scenario, load_scenario
from .macsim import simulate_csma, simulate_negotiation
from .optimizer import alternate
from .rates import scenario_rates
from .reservation import SubunitPopulationError, solve_reservation
from .sweeps import ROW_COLUMNS, SweepSpec, evaluate_operating_point, run_sweep
from .throughput import REPORT_COLUMNS


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_csv(path: str, columns: Sequence[str], rows: Sequence[dict], *,
               timestamp: bool, command: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if timestamp:
            fh.write(f"# sagin-uplink {command} {datetime.now(timezone.utc).isoformat()}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def _load(config_path: Optional[str]) -> Scenario:
    if config_path is None:
        return default_scenario()
    return load_scenario(config_path)


def _case_of(rho: float) -> str:
    return "g2s-only" if rho == 0 else ("gas-only" if rho == 1 else "mixed")


def cmd_analyze(args) -> int:
    scenario = _load(args.config)
    rates = scenario_rates(scenario)
    report = evaluate_operating_point(scenario.cfg, scenario.timings, rates, args.rho)
    row = {"case": _case_of(args.rho), "n_users": scenario.cfg.n_users, "rho": args.rho}
    row.update({k: getattr(report, k) for k in REPORT_COLUMNS if hasattr(report, k)})
    _write_csv(args.output, ("case",) + REPORT_COLUMNS, [row],
               timestamp=not args.no_timestamp, command="analyze")
    return 0


def cmd_optimize(args) -> int:
    scenario = _load(args.config)
    rates = scenario_rates(scenario)
    result = alternate(scenario.cfg, scenario.timings, rates,
                       max_iters=args.max_iters, tol=args.tol)
    trace_rows = [{"iteration": it, "rho": rho, "objective": obj}
                  for it, rho, obj in result.trace]
    _write_csv(args.output, ("iteration", "rho", "objective"), trace_rows,
               timestamp=not args.no_timestamp, command="optimize")

    decision_path = args.decision_output or (args.output + ".decision.csv")
    hap_of = {}
    for user, hap in zip(*np.nonzero(result.assignment_star)):
        hap_of[int(user)] = int(hap)
    decision_rows = [{"user": n,
                      "mode": "gas" if n in hap_of else "g2s",
                      "hap": hap_of.get(n, -1),
                      "rho": result.rho_star}
                     for n in range(scenario.cfg.n_users)]
    _write_csv(decision_path, ("user", "mode", "hap", "rho"), decision_rows,
               timestamp=not args.no_timestamp, command="optimize")
    print(f"rho*={result.rho_star:.9g} objective={result.objective:.9g} "
          f"iterations={result.iterations} converged={result.converged}")
    return 0 if result.converged else 1


def cmd_simulate(args) -> int:
    scenario = _load(args.config)
    cfg, timings = scenario.cfg, scenario.timings
    if args.target == "csma":
        stats = simulate_csma(cfg.n_users, timings, args.slots, args.seed)
        cp = None
        try:
            from .contention import solve_contention
            cp = solve_contention(cfg.n_users, timings)
        except Exception:
            pass
        row = {"target": "csma", "n": cfg.n_users, "seed": stats.seed,
               "slots": stats.slots_simulated,
               "est_tau": stats.est_tau, "se_tau": stats.se_tau,
               "est_ps": stats.est_ps, "se_ps": stats.se_ps,
               "est_pe": stats.est_pe, "se_pe": stats.se_pe,
               "est_pc": stats.est_pc, "se_pc": stats.se_pc,
               "est_util": stats.est_util, "se_util": stats.se_util,
               "analytic_ps": cp.p_success if cp else float("nan"),
               "analytic_util": cp.utilization if cp else float("nan")}
    else:
        frames = max(args.slots // max(int(timings.negotiation_s / timings.t_handshake()), 1), 100)
        stats = simulate_negotiation(cfg.n_users, cfg.q_negotiation(), timings, frames, args.seed)
        try:
            zeta = solve_reservation(cfg.n_users, cfg, timings).zeta_s
        except SubunitPopulationError:
            zeta = float("nan")
        row = {"target": "negotiation", "n": cfg.n_users, "seed": stats.seed,
               "slots": stats.slots_simulated,
               "est_zeta_s": stats.est_zeta_s, "se_zeta_s": stats.se_zeta_s,
               "mean_reservations": stats.mean_reservations, "analytic_zeta_s": zeta}
    _write_csv(args.output, tuple(row.keys()), [row],
               timestamp=not args.no_timestamp, command="simulate")
    return 0


def cmd_sweep(args) -> int:
    scenario = _load(args.config)
    with open(args.sweep, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    spec = SweepSpec(
        variable=doc["variable"],
        values=tuple(doc["values"]),
        fixed_overrides=doc.get("fixed_overrides", {}),
        geometry_seed=int(doc.get("geometry_seed", 7)),
    )
    rows = run_sweep(scenario, spec, jobs=args.jobs)
    output = args.output or doc.get("output_path")
    if not output:
        raise SystemExit("sweep needs --output or an output_path in the sweep file")
    _write_csv(output, ROW_COLUMNS, rows, timestamp=not args.no_timestamp, command="sweep")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sagin-uplink",
        description="Hybrid direct/HAP-reserved satellite uplink: analysis, "
                    "optimization, simulation and parameter sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="scenario JSON (defaults to the built-in scenario)")
        p.add_argument("--output", required=True, help="output CSV path")
        p.add_argument("--no-timestamp", action="store_true",
                       help="omit the timestamp comment for byte-reproducible files")

    p = sub.add_parser("analyze", help="throughput report at one operating point")
    common(p)
    p.add_argument("--rho", type=float, default=0.5, help="uniform relay probability")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("optimize", help="alternating transmission-control optimization")
    common(p)
    p.add_argument("--decision-output", help="decision CSV (default: <output>.decision.csv)")
    p.add_argument("--max-iters", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="slot-level Monte Carlo run")
    common(p)
    p.add_argument("--target", choices=("csma", "negotiation"), default="csma")
    p.add_argument("--slots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="multi-point parameter sweep")
    p.add_argument("--config", help="scenario JSON (defaults to the built-in scenario)")
    p.add_argument("--output", help="output CSV path (overrides the sweep file)")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("--sweep", required=True, help="sweep spec JSON")
    p.add_argument("--jobs", type=int, default=1, help="concurrent point evaluations")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

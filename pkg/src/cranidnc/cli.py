"""Command line entry point: solve, sweep, plot, demo, oracle."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from . import clique as cq
from .config import ConfigError, load_config
from .fixtures import TOY_COMBINATIONS, toy_instance
from .graph import assemble_cran_idnc_graph, build_power_subgraph
from .idnc import enumerate_combinations
from .oracle import OracleGuardError, brute_force_best_plan
from .plot import render_plot
from .sched import SCHEDULERS, PlanValidationError, evaluate, run_scheduler, schedule_joint
from .sweep import DEGRADED, load_spec, run_sweep, write_csv

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_DEGRADED = 0, 1, 2, 3

log = logging.getLogger("cranidnc")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 means "validation failure" here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _degraded(flags) -> bool:
    return any(DEGRADED in f or "bound-not-proven" in f for f in flags)


def _print_plan(plan, instance, as_json: bool) -> int:
    try:
        evaluate(plan, instance)
        status = EXIT_DEGRADED if _degraded(plan.flags) else EXIT_OK
        error = None
    except PlanValidationError as exc:
        status, error = EXIT_INVALID, exc
    if as_json:
        data = plan.to_dict()
        data["valid"] = error is None
        if error is not None:
            data["violation"] = error.constraint
        print(json.dumps(data, indent=2))
    else:
        print(plan.describe())
        if error is not None:
            print(f"validation failed: {error}")
    return status


def cmd_solve(args) -> int:
    rc = load_config(args.config)
    instance = rc.make_instance(args.seed)
    plan = run_scheduler(args.scheduler, instance, exact=args.exact, node_budget=args.node_budget)
    return _print_plan(plan, instance, args.json)


def cmd_oracle(args) -> int:
    rc = load_config(args.config)
    instance = rc.make_instance(args.seed)
    try:
        plan = brute_force_best_plan(instance, args.grid)
    except OracleGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = _print_plan(plan, instance, args.json)
    if args.compare and not args.json:
        joint = schedule_joint(instance, grid_points=args.grid)
        print(f"joint sum_rate: {joint.sum_rate:.12g} ({'equal' if joint.sum_rate == plan.sum_rate else 'DIFFERENT'})")
    return status


def cmd_sweep(args) -> int:
    spec = load_spec(args.config)
    changes = {}
    if args.trials is not None:
        if args.trials < 1:
            print("error: --trials must be >= 1", file=sys.stderr)
            return EXIT_USAGE
        changes["trials"] = args.trials
    if args.node_budget is not None:
        changes["node_budget"] = args.node_budget
    if args.exact is not None:
        changes["exact"] = args.exact
    spec = dataclasses.replace(spec, **changes)
    rows = run_sweep(spec, workers=args.workers, timing=args.timing)
    write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    if any(f.startswith("invalid:") for r in rows for f in r.flags.split(";")):
        return EXIT_INVALID
    return EXIT_DEGRADED if any(_degraded(r.flags.split(";")) for r in rows) else EXIT_OK


def cmd_plot(args) -> int:
    curves = render_plot(args.csv, args.out)
    print(f"wrote {args.out} ({len(curves)} curves)")
    return EXIT_OK


def demo_text() -> str:
    instance = toy_instance()
    combos = enumerate_combinations(instance.side_info)
    names = {c: f"c{k + 1}" for k, c in enumerate(TOY_COMBINATIONS)}
    lines = [f"File combinations ({len(combos)}):"]
    for c in TOY_COMBINATIONS:
        lines.append(f"  {names[c]} = {c.label()}")

    schedules = build_power_subgraph(0, combos, instance, prune_silent=True)
    lines.append(f"Distinct feasible schedules on RRB 1 ({len(schedules)}):")
    for v in schedules:
        lines.append(f"  {v.label(names):<14} weight {v.symbolic_weight():<16} = {v.weight:g}")

    g = assemble_cran_idnc_graph(build_power_subgraph(0, combos, instance))
    best = cq.exact_max_weight_clique(g)
    plan = schedule_joint(instance)
    lines.append("Winning clique: " + ", ".join(g.vertices[i].label(names) for i in best.ids))
    lines.append(f"sum_rate: {plan.sum_rate:g}")
    return "\n".join(lines)


def cmd_demo(args) -> int:
    print(demo_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cranidnc", description="Coordinated CRAN scheduling with instantly decodable network coding.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def search_flags(p, default_exact):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--exact", dest="exact", action="store_true", default=default_exact,
                           help="exact maximum-weight clique search")
        group.add_argument("--greedy", dest="exact", action="store_false", help="greedy clique selection")
        p.add_argument("--node-budget", type=int, default=None, help="search-node budget of the exact solver")

    p = sub.add_parser("solve", help="schedule one instance and print the plan")
    p.add_argument("--config", required=True)
    p.add_argument("--scheduler", choices=sorted(SCHEDULERS), default="joint")
    p.add_argument("--seed", type=int, default=None, help="overrides rng_seed from the config")
    p.add_argument("--json", action="store_true", help="print the plan as JSON")
    search_flags(p, True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a Monte-Carlo sweep and write CSV")
    p.add_argument("--config", required=True, help="sweep spec (JSON)")
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int, default=None, help="overrides trials from the spec")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="record wall_ms (makes output run-dependent)")
    search_flags(p, None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a sweep CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("demo", help="walk through the 3-user, 2-RRH example")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("oracle", help="brute-force optimum of a tiny instance")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--grid", type=int, default=None, help="power grid points (default from config)")
    p.add_argument("--compare", action="store_true", help="also run the joint scheduler")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

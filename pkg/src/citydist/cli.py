"""Command-line interface.

Subcommands: evaluate, compare, optimize, sweep, validate.  Exit codes:
0 success, 2 scenario/validation error, 3 infeasible model, 4 internal
invariant failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .model import ConsistencyError, DomainError, InfeasibleError, ModelError
from .optimize import brute_force_grid, simulated_annealing
from .report import emit_report
from .scenario import ScenarioError, load_scenario
from .schemes import LayerMode, SchemeInfeasibleError, compare_schemes
from .sweep import SweepSpec, sweep_parameter

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="citydist",
        description="Evaluate and optimize multi-echelon urban freight distribution schemes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--scenario", required=True, help="scenario file path")
        p.add_argument("--output", default=None, help="write the report to this file")
        p.add_argument("--format", default="table", choices=("table", "json", "csv"))

    p = sub.add_parser("evaluate", help="KPIs of one scheme")
    add_common(p)
    p.add_argument("--scheme", required=True)

    p = sub.add_parser("compare", help="KPIs of several schemes side by side")
    add_common(p)
    p.add_argument("--schemes", required=True, help="comma-separated scheme names")
    p.add_argument("--baseline", default=None, help="baseline scheme (default: first)")

    p = sub.add_parser("optimize", help="optimize unit-to-vehicle allocation of one layer")
    add_common(p)
    p.add_argument("--scheme", required=True)
    p.add_argument("--layer", type=int, required=True, help="1-based layer number")
    p.add_argument("--vehicles", default=None,
                   help="comma-separated vehicle ids (default: scenario optimization block)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--oracle", action="store_true",
                   help="use the exhaustive grid search instead of annealing")
    p.add_argument("--trace", action="store_true", help="include the best-so-far trace")

    p = sub.add_parser("sweep", help="sweep one numeric parameter of one layer")
    add_common(p)
    p.add_argument("--scheme", required=True)
    p.add_argument("--layer", type=int, required=True, help="1-based layer number")
    p.add_argument("--param", required=True,
                   help="NetworkParams field, or speed_kmh for the fleet speed")
    p.add_argument("--range", required=True, dest="range_",
                   metavar="START:STOP:STEP")

    p = sub.add_parser("validate", help="check a scenario file and exit")
    p.add_argument("--scenario", required=True)
    return parser


def _layer_index(scheme, number: int) -> int:
    if not (1 <= number <= len(scheme.layers)):
        raise DomainError(
            f"scheme '{scheme.name}' has {len(scheme.layers)} layers; got --layer {number}")
    return number - 1


def _optimize(args, scenario) -> object:
    scheme = scenario.scheme(args.scheme)
    idx = _layer_index(scheme, args.layer)
    layer = scheme.layers[idx]
    if layer.mode is not LayerMode.ANALYTICAL:
        raise DomainError(f"layer {args.layer} of '{args.scheme}' is not an analytical layer")
    vehicle_ids = (args.vehicles.split(",") if args.vehicles
                   else scenario.optimization_vehicles)
    if not vehicle_ids:
        raise DomainError("no vehicles given: pass --vehicles or add an "
                          "optimization block to the scenario")
    unknown = [v for v in vehicle_ids if v not in scenario.vehicles]
    if unknown:
        raise DomainError(f"unknown vehicle id(s): {', '.join(unknown)}")
    fleet = [scenario.vehicles[v] for v in vehicle_ids]
    units = [u for a in layer.fleet for u in a.demand.units]
    if not units:
        raise DomainError(f"layer {args.layer} of '{args.scheme}' carries no unit demand")
    config = scenario.sa
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.oracle:
        return brute_force_grid(fleet, units, layer.params, step=config.grid_step,
                                penalty_weight=config.penalty_weight,
                                external_factors=scheme.external_factors)
    return simulated_annealing(fleet, units, layer.params, config,
                               external_factors=scheme.external_factors,
                               keep_trace=args.trace)


def _sweep(args, scenario) -> object:
    scheme = scenario.scheme(args.scheme)
    idx = _layer_index(scheme, args.layer)
    try:
        start, stop, step = (float(x) for x in args.range_.split(":"))
    except ValueError as exc:
        raise DomainError(f"--range must be START:STOP:STEP, got '{args.range_}'") from exc
    return sweep_parameter(SweepSpec(parameter=args.param, start=start, stop=stop,
                                     step=step, scheme=scheme, layer_index=idx))


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.scenario)
        if args.command == "validate":
            print(f"scenario '{scenario.name}' is valid: "
                  f"{len(scenario.vehicles)} vehicles, {len(scenario.suppliers)} suppliers, "
                  f"schemes: {', '.join(scenario.scheme_names())}")
            return EXIT_OK
        if args.command == "evaluate":
            from .schemes import evaluate_scheme
            report = evaluate_scheme(scenario.scheme(args.scheme))
        elif args.command == "compare":
            names = args.schemes.split(",")
            report = compare_schemes([scenario.scheme(n) for n in names],
                                     baseline_name=args.baseline)
        elif args.command == "optimize":
            report = _optimize(args, scenario)
        elif args.command == "sweep":
            report = _sweep(args, scenario)
        else:  # pragma: no cover
            raise DomainError(f"unknown command {args.command}")
        text = emit_report(report, fmt=args.format, path=args.output)
        if args.output is None:
            sys.stdout.write(text)
        return EXIT_OK
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (SchemeInfeasibleError, InfeasibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DomainError as exc:
        print(f"invalid request: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (ConsistencyError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

"""Command-line entry points: plan, simulate, replan, dump-model.

Exit codes for simulate/replan: 0 the flight completed, 2 the battery was
exhausted first, 3 the scenario was invalid, 4 the time cap was hit.
"""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .coverage import generate_plan
from .energy import dump_model_csv, harmonic_model
from .errors import CoversimError, ParseError, ScenarioInvalid
from .geometry import Point2, Polygon
from .scenario import load_scenario
from .simulator import BATTERY_EXHAUSTED, COMPLETED, performance_metric, run_scenario

EXIT_COMPLETED = 0
EXIT_EXHAUSTED = 2
EXIT_INVALID = 3
EXIT_MAXTIME = 4


def read_polygon(path) -> Polygon:
    """Polygon file: one 'x y' or 'x,y' vertex per line, # comments allowed."""
    vertices = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ScenarioInvalid(f"{path}: bad vertex line {raw!r}")
            vertices.append(Point2(float(parts[0]), float(parts[1])))
    return Polygon(vertices)


def _sweep_normal(polygon: Polygon) -> Point2:
    """Unit advance direction: inward normal of the polygon's leading edge."""
    v0 = polygon.vertices[0]
    n_hat = (polygon.vertices[-1] - v0).unit().perp()
    if (polygon.centroid() - v0).dot(n_hat) < 0.0:
        n_hat = n_hat.scaled(-1.0)
    return n_hat


def _cmd_plan(args) -> int:
    polygon = read_polygon(args.polygon)
    n_hat = _sweep_normal(polygon)
    if args.start is not None:
        sx, sy = (float(v) for v in args.start.split(","))
        start = Point2(sx, sy)
    else:
        start = polygon.vertices[0] + n_hat.scaled(args.shift / 2.0)
    shift = n_hat.scaled(args.shift)
    lower_c1 = args.c1_min
    if lower_c1 is None:
        lower_c1 = 0.5 * (args.min_radius**2 - args.radius**2)
    plan = generate_plan(
        polygon, args.radius, args.min_radius, shift, start, args.altitude,
        path_bounds=[(lower_c1, 0.0)],
        compute_bounds=[(args.c2_min, args.c2_max)],
        epsilon=args.epsilon,
    )
    plan.write_csv(args.out)
    print(f"wrote {len(plan.stages)} stages to {args.out} "
          f"(final point {plan.final_point.x:.1f}, {plan.final_point.y:.1f})")
    return 0


def _cmd_simulate(args, adaptive_default=False) -> int:
    scenario = load_scenario(args.scenario)
    if args.profile is not None:
        scenario.override_profile(args.profile)
    adaptive = adaptive_default or args.adaptive
    telemetry = run_scenario(scenario, adaptive=adaptive)
    if args.out:
        telemetry.write_csv(args.out)
    if args.svg:
        from .svg import write_figure

        write_figure(telemetry, scenario.polygon, args.svg)
    line = (f"{scenario.name}: {telemetry.termination} at t = {telemetry.t[-1]:.2f} s, "
            f"final SoC {telemetry.final_soc:.3f}")
    if telemetry.termination == COMPLETED and telemetry.final_soc > 0.0:
        metric = performance_metric(telemetry, w1=scenario.w1, w2=scenario.w2)
        line += f", metric {metric:.3f}"
    print(line)
    if telemetry.termination == COMPLETED:
        return EXIT_COMPLETED
    if telemetry.termination == BATTERY_EXHAUSTED:
        return EXIT_EXHAUSTED
    return EXIT_MAXTIME


def _cmd_dump_model(args) -> int:
    model = harmonic_model(args.order, args.period, args.rho, args.sigma)
    dump_model_csv(model, args.out)
    print(f"wrote model matrices to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coversim")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="generate a coverage plan CSV")
    p_plan.add_argument("--polygon", required=True)
    p_plan.add_argument("--shift", type=float, required=True, help="lane advance per block [m]")
    p_plan.add_argument("--radius", type=float, required=True, help="ideal turning radius [m]")
    p_plan.add_argument("--min-radius", type=float, required=True)
    p_plan.add_argument("--out", required=True)
    p_plan.add_argument("--start", default=None, help="start point 'x,y'")
    p_plan.add_argument("--altitude", type=float, default=50.0)
    p_plan.add_argument("--epsilon", type=float, default=None)
    p_plan.add_argument("--c1-min", type=float, default=None)
    p_plan.add_argument("--c2-min", type=int, default=2)
    p_plan.add_argument("--c2-max", type=int, default=10)
    p_plan.set_defaults(func=_cmd_plan)

    for name, adaptive in (("simulate", False), ("replan", True)):
        p = sub.add_parser(name, help="run a scenario" if name == "simulate"
                           else "run a scenario with re-planning enabled")
        p.add_argument("--scenario", required=True)
        p.add_argument("--out", default=None, help="telemetry CSV path")
        p.add_argument("--svg", default=None, help="figure SVG path")
        p.add_argument("--profile", default=None, help="override the compute power profile CSV")
        p.add_argument("--adaptive", action="store_true", default=False)
        p.set_defaults(func=lambda a, ad=adaptive: _cmd_simulate(a, adaptive_default=ad))

    p_dump = sub.add_parser("dump-model", help="write model matrices as CSV")
    p_dump.add_argument("--order", type=int, default=3)
    p_dump.add_argument("--period", type=float, required=True)
    p_dump.add_argument("--rho", type=int, default=1)
    p_dump.add_argument("--sigma", type=int, default=1)
    p_dump.add_argument("--out", required=True)
    p_dump.set_defaults(func=_cmd_dump_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioInvalid, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CoversimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

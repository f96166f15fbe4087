"""Command line entry point: ``schoolbus {gen,solve,bench,sweep,grid2,verify}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import harness
from .instance import (DEFAULT_CAPACITY, DEFAULT_SPEED_MPH, InstanceError, SolverConfig,
                       generate_instance, load_instance, save_instance)
from .routing import RoutingInfeasible
from .scda import METHODS, SizeLimitExceeded, compute_metrics, load_solution, verify_solution


def _aat(value: str):
    if value.lower() == "mnt":
        return "mnt"
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--aat expects an integer or 'mnt', got {value!r}")
    if n < 0:
        raise argparse.ArgumentTypeError("--aat must be non-negative")
    return n


def _ints(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v.strip()]


def _floats(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def _grid(value: str) -> list[tuple[int, int]]:
    out = []
    for cell in value.split(","):
        if cell.strip():
            schools, stops = cell.lower().split("x")
            out.append((int(schools), int(stops)))
    return out


def _shared(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("shared options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--capacity", type=int, default=None,
                   help=f"bus capacity (default {DEFAULT_CAPACITY}; overrides the instance file)")
    g.add_argument("--speed-mph", type=float, default=None,
                   help=f"bus speed (default {DEFAULT_SPEED_MPH}; overrides the instance file)")
    g.add_argument("--mrt-min", type=float, default=90, help="maximum ride time, 0 disables")
    g.add_argument("--aat", type=_aat, default="mnt", help="additional allowed trips or 'mnt'")
    g.add_argument("--buffer-s", type=int, default=0)
    g.add_argument("--time-limit-s", type=float, default=30.0,
                   help="local search budget per school subproblem")
    for name, default in (("b", 1e5), ("n", 1e5), ("c", 1e5), ("t", 1.0), ("d", 0.5)):
        g.add_argument(f"--alpha-{name}", type=float, default=default)
    g.add_argument("--alpha-c-oa", type=float, default=5e4)
    g.add_argument("--alpha-c-ca", type=float, default=9e4)


def config_from_args(args) -> SolverConfig:
    return SolverConfig(alpha_b=args.alpha_b, alpha_n=args.alpha_n, alpha_c=args.alpha_c,
                        alpha_t=args.alpha_t, alpha_d=args.alpha_d, alpha_c_oa=args.alpha_c_oa,
                        alpha_c_ca=args.alpha_c_ca,
                        mrt=None if args.mrt_min == 0 else round(args.mrt_min * 60),
                        aat=args.aat, buffer=args.buffer_s,
                        time_limit_per_subproblem=args.time_limit_s, seed=args.seed)


def _load(args):
    inst = load_instance(args.inp)
    changes = {}
    if args.capacity is not None:
        changes["capacity"] = args.capacity
    if args.speed_mph is not None:
        changes["speed_mph"] = args.speed_mph
    return dataclasses.replace(inst, **changes) if changes else inst


def _capacity(args) -> int:
    return DEFAULT_CAPACITY if args.capacity is None else args.capacity


def _speed(args) -> float:
    return DEFAULT_SPEED_MPH if args.speed_mph is None else args.speed_mph


def cmd_gen(args) -> int:
    inst = generate_instance(args.schools, args.stops, args.seed, capacity=_capacity(args),
                             speed_mph=_speed(args))
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {len(inst.schools)} schools, {len(inst.stops)} stops")
    return 0


def cmd_solve(args) -> int:
    inst = _load(args)
    config = config_from_args(args)
    sol = harness.cmd_solve(inst, args.method, config, args.out, args.report,
                            scenario=Path(args.inp).stem)
    m = sol.metrics
    print(f"{sol.method}: nob={m['nob']} not={m['not']} "
          f"tvt={harness.minutes_half_up(m['tvt_s'])} min runtime={sol.runtime:.3f} s")
    return 0


def cmd_bench(args) -> int:
    methods = [m for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m.lower() not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {', '.join(METHODS)}")
    report = harness.cmd_bench(args.grid, methods, args.seeds, config_from_args(args),
                               capacity=_capacity(args), speed_mph=_speed(args))
    summary = args.summary or str(Path(args.out).with_suffix("")) + ".summary.csv"
    report.write(args.out, summary)
    print(f"wrote {len(report.rows)} rows to {args.out} and the summary to {summary}")
    return 0


def cmd_sweep(args) -> int:
    rows = harness.cmd_sweep(_load(args), args.values, config_from_args(args))
    harness.write_csv(args.out, harness.SWEEP_FIELDS, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_grid2(args) -> int:
    combos = harness.GRID2_COMBINATIONS
    if args.combinations:
        wanted = args.combinations.split(",")
        known = {c.name: c for c in combos}
        missing = [w for w in wanted if w not in known]
        if missing:
            raise ValueError(f"unknown combinations {missing}; known: {', '.join(known)}")
        combos = [known[w] for w in wanted]
    rows = harness.cmd_grid2(_load(args), combos, config_from_args(args))
    harness.write_csv(args.out, harness.GRID2_FIELDS, rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_verify(args) -> int:
    inst = _load(args)
    config = config_from_args(args)
    sol = load_solution(args.solution, inst, config)
    problems = [str(v) for v in verify_solution(sol, inst, config)]
    stored = json.loads(Path(args.solution).read_text()).get("metrics")
    if stored is not None and stored != compute_metrics(sol.plan, sol.schedule):
        problems.append("[metrics] solution: stored metrics do not recompute")
    for p in problems:
        print(p)
    print("ok" if not problems else f"{len(problems)} violation(s)")
    return 0 if not problems else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schoolbus",
                                     description="Multi-school bus routing and scheduling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--schools", type=int, required=True)
    p.add_argument("--stops", type=int, required=True)
    p.add_argument("--out", required=True)
    _shared(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve an instance with one method")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--method", choices=METHODS, type=str.lower, default="alg2w")
    p.add_argument("--out", required=True, help="solution JSON")
    p.add_argument("--report", help="one-row CSV report")
    _shared(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run methods over the scenario grid")
    p.add_argument("--grid", type=_grid,
                   default=list(harness.EXPERIMENT1_GRID), help="e.g. 2x20,4x40")
    p.add_argument("--methods", default=",".join(METHODS))
    p.add_argument("--seeds", type=_ints, default=[0], help="comma-separated seeds")
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="summary CSV (default: <out>.summary.csv)")
    _shared(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="Algorithm 1 over compatibility weights")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--values", type=_floats, default=list(harness.SWEEP_VALUES))
    p.add_argument("--out", required=True)
    _shared(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("grid2", help="extra trips / time limit / ride-time grid")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--combinations", help="subset of names, e.g. A0TL15,A1TL30MRT")
    p.add_argument("--out", required=True)
    _shared(p)
    p.set_defaults(func=cmd_grid2)

    p = sub.add_parser("verify", help="check a solution file against its instance")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--solution", required=True)
    _shared(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, RoutingInfeasible, SizeLimitExceeded, ValueError, OSError,
            KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

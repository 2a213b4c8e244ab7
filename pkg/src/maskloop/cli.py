"""``maskloop`` command line.

Exit codes: 0 success, 1 input/output problem, 2 bad arguments,
3 infeasible model or point, 4 solver limit reached.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import baseline, pareto
from .formulation import Objective, Solution, build_circular_model, evaluate_solution
from .geo import CoordinateError, instance_distances
from .instance import (
    InstanceParseError,
    InstanceValidationError,
    RangeConfig,
    generate_synthetic,
    load_instance,
    save_instance,
)
from .solver import MilpStatus, SolveOptions, solve_milp

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4

log = logging.getLogger("maskloop")


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _finite_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be finite, got {text}")
    return value


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver")
    g.add_argument("--gap", type=float, default=1e-6, help="relative optimality gap (default 1e-6)")
    g.add_argument("--node-limit", type=_positive_int, default=1_000_000)
    g.add_argument("--time-limit", type=_finite_float, default=None, help="seconds per MILP")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maskloop", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", help="write a seeded synthetic instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--hospitals", type=_positive_int, required=True)
    p.add_argument("--sites", type=_positive_int, required=True)
    p.add_argument("--disposal", type=_positive_int, default=1)
    p.add_argument("--ranges", type=Path, help="JSON object overriding sampling ranges, e.g. {\"budget\": [5e5, 6e5]}")
    p.add_argument("--out", type=Path, required=True, help="instance file to write")

    p = sub.add_parser("distances", help="write hospital->site and site->site distance CSVs")
    p.add_argument("instance", type=Path)
    p.add_argument("--out", type=Path, required=True, help="directory for the two CSV files")

    p = sub.add_parser("solve", help="solve one single-objective model")
    p.add_argument("instance", type=Path)
    p.add_argument("--objective", choices=[o.value for o in Objective], default="Z1")
    p.add_argument("--eps2", type=_finite_float, help="lower bound on Z2")
    p.add_argument("--eps3", type=_finite_float, help="lower bound on Z3")
    p.add_argument("--out", type=Path, required=True, help="JSON report to write")
    _add_solver_flags(p)

    p = sub.add_parser("pareto", help="payoff table, epsilon sweep and non-dominated front")
    p.add_argument("instance", type=Path)
    p.add_argument("--n2", type=_positive_int, default=4, help="grid count for Z2 (default 4)")
    p.add_argument("--n3", type=_positive_int, default=4, help="grid count for Z3 (default 4)")
    p.add_argument("--workers", type=_positive_int, default=1, help="solve grid cells in parallel")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    _add_solver_flags(p)

    p = sub.add_parser("compare", help="compare a circular solution with the linear baseline")
    p.add_argument("instance", type=Path)
    p.add_argument("point", type=Path, help="report from 'solve' or front.json from 'pareto'")
    p.add_argument("--index", type=int, help="which point of the file (default: highest Z1)")
    p.add_argument("--jobs-low", type=int, default=20)
    p.add_argument("--jobs-high", type=int, default=30)
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


# --------------------------------------------------------------------------
# helpers


def _load(path: Path):
    try:
        return load_instance(path)
    except FileNotFoundError:
        raise _Fail(EXIT_IO, f"instance file not found: {path}") from None
    except InstanceValidationError as exc:
        raise _Fail(EXIT_IO, f"{path}: {exc}") from None
    except (InstanceParseError, OSError) as exc:
        raise _Fail(EXIT_IO, f"{path}: {exc}") from None


def _write(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot write {path}: {exc}") from None


def _out_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _Fail(EXIT_IO, f"cannot create {path}: {exc}") from None
    return path


def _options(args) -> SolveOptions:
    try:
        return SolveOptions(relative_gap=args.gap, node_limit=args.node_limit, time_limit_seconds=args.time_limit)
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from None


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _distances(inst):
    try:
        return instance_distances(inst)
    except (CoordinateError, ValueError) as exc:
        raise _Fail(EXIT_IO, f"bad distance data: {exc}") from None


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    ranges = RangeConfig()
    if args.ranges is not None:
        try:
            overrides = json.loads(args.ranges.read_text(encoding="utf-8"))
        except OSError as exc:
            raise _Fail(EXIT_IO, f"cannot read {args.ranges}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise _Fail(EXIT_IO, f"{args.ranges}: invalid JSON: {exc}") from None
        known = {f.name for f in dataclasses.fields(RangeConfig)}
        if not isinstance(overrides, dict) or set(overrides) - known:
            bad = sorted(set(overrides) - known) if isinstance(overrides, dict) else overrides
            raise _Fail(EXIT_USAGE, f"unknown range fields: {bad}")
        try:
            ranges = dataclasses.replace(ranges, **{k: tuple(v) for k, v in overrides.items()})
            ranges.check()
        except (TypeError, ValueError) as exc:
            raise _Fail(EXIT_USAGE, f"bad ranges: {exc}") from None
    try:
        inst = generate_synthetic(args.seed, args.hospitals, args.sites, args.disposal, ranges)
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from None
    _write(args.out, save_instance(inst))
    return EXIT_OK


def cmd_distances(args) -> int:
    inst = _load(args.instance)
    d_hs, d_ss = _distances(inst)
    out = _out_dir(args.out)
    _write(out / "hospital_to_site.csv", d_hs.to_csv().encode("utf-8"))
    _write(out / "site_to_site.csv", d_ss.to_csv().encode("utf-8"))
    return EXIT_OK


def _status_code(status: MilpStatus) -> int:
    return {
        MilpStatus.OPTIMAL: EXIT_OK,
        MilpStatus.INFEASIBLE: EXIT_INFEASIBLE,
        MilpStatus.GAP_LIMIT: EXIT_LIMIT,
        MilpStatus.NODE_LIMIT: EXIT_LIMIT,
    }[status]


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    dist = _distances(inst)
    if args.eps3 is not None and args.eps3 < 0:
        raise _Fail(EXIT_USAGE, "--eps3 must be >= 0")
    problem, lay = build_circular_model(inst, *dist, args.objective, eps2=args.eps2, eps3=args.eps3)
    res = solve_milp(problem, _options(args))
    doc = {
        "format": "maskloop-front",
        "version": 1,
        "objective": args.objective,
        "status": res.status.value,
        "objective_value": None if res.values is None else res.objective,
        "best_bound": None if math.isnan(res.best_bound) else res.best_bound,
        "nodes_explored": res.nodes_explored,
        "points": [],
    }
    if res.values is not None:
        sol = Solution(lay, res.values)
        triple = evaluate_solution(inst, *dist, sol)
        point = pareto.ParetoPoint(
            math.nan if args.eps2 is None else args.eps2,
            math.nan if args.eps3 is None else args.eps3,
            triple, tuple(sol.open_collection(inst)), tuple(sol.open_reprocessing(inst)),
            Solution(lay, res.values, triple),
        )
        doc["flows"] = {"collected": sol.collected, "reprocessed": sol.reprocessed, "disposed": sol.disposed}
        doc["points"] = json.loads(pareto.export_front([point], fmt="json"))["points"]
    _write(args.out, _json_bytes(doc))
    return _status_code(res.status)


def cmd_pareto(args) -> int:
    inst = _load(args.instance)
    dist = _distances(inst)
    opts = _options(args)
    try:
        sweep = pareto.epsilon_sweep(inst, dist, args.n2, args.n3, opts, workers=args.workers)
    except pareto.PayoffError as exc:
        code = EXIT_INFEASIBLE if exc.status is MilpStatus.INFEASIBLE else EXIT_LIMIT
        raise _Fail(code, str(exc)) from None
    out = _out_dir(args.out)
    limited = [s for s in sweep.skipped if s.status is not MilpStatus.INFEASIBLE]
    summary = {
        "payoff": [dict(zip(("z1", "z2", "z3"), row.as_tuple())) for row in sweep.payoff.rows],
        "grid_eps2": list(sweep.grid2),
        "grid_eps3": list(sweep.grid3),
        "feasible_cells": len(sweep.points),
        "skipped_cells": [{"eps2": s.eps2, "eps3": s.eps3, "status": s.status.value} for s in sweep.skipped],
    }
    _write(out / "sweep.json", _json_bytes(summary))
    if sweep.points:
        front = pareto.filter_nondominated(sweep.points)
        _write(out / "sweep.csv", pareto.export_front(sweep.points, fmt="csv"))
        _write(out / "front.csv", pareto.export_front(front, fmt="csv"))
        _write(out / "front.json", pareto.export_front(front, fmt="json"))
    else:
        raise _Fail(EXIT_INFEASIBLE, "no grid cell was feasible")
    return EXIT_LIMIT if limited else EXIT_OK


def cmd_compare(args) -> int:
    inst = _load(args.instance)
    dist = _distances(inst)
    try:
        lin = baseline.LinearBaselineParams(args.jobs_low, args.jobs_high)
    except ValueError as exc:
        raise _Fail(EXIT_USAGE, str(exc)) from None
    try:
        points = pareto.load_front(args.point)
    except FileNotFoundError:
        raise _Fail(EXIT_IO, f"point file not found: {args.point}") from None
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise _Fail(EXIT_IO, f"{args.point}: not a solution file ({exc})") from None
    if not points:
        raise _Fail(EXIT_INFEASIBLE, f"{args.point} holds no feasible solution")
    if args.index is None:
        # highest profit, earliest on ties
        idx = max(range(len(points)), key=lambda i: (points[i].triple.z1, -i))
    elif -len(points) <= args.index < len(points):
        idx = args.index
    else:
        raise _Fail(EXIT_USAGE, f"--index {args.index} out of range for {len(points)} points")
    try:
        report = baseline.compare(inst, dist, points[idx], lin)
    except baseline.InfeasiblePointError as exc:
        raise _Fail(EXIT_INFEASIBLE, str(exc)) from None
    except ValueError as exc:
        raise _Fail(EXIT_IO, str(exc)) from None
    out = _out_dir(args.out)
    _write(out / "comparison.json", report.to_json())
    _write(out / "comparison.txt", report.table().encode("utf-8"))
    return EXIT_OK


_COMMANDS = {
    "generate": cmd_generate,
    "distances": cmd_distances,
    "solve": cmd_solve,
    "pareto": cmd_pareto,
    "compare": cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except _Fail as exc:
        print(f"maskloop {args.command}: {exc}", file=sys.stderr)
        if exc.code == EXIT_USAGE:
            parser.print_usage(sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())

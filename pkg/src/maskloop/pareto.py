"""Epsilon-constraint sweep over the three objectives.

Profit (Z1) is kept as the objective; the CO2 advantage (Z2) and job count
(Z3) become lower-bound rows.  The bounds are laid on an even grid spanning the
ranges observed in the payoff table.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .formulation import (
    Objective,
    ObjectiveTriple,
    Solution,
    VariableLayout,
    build_circular_model,
    evaluate_solution,
)
from .geo import DistanceMatrix
from .instance import Instance
from .solver import MilpStatus, SolveOptions, solve_milp

__all__ = [
    "CSV_COLUMNS",
    "ParetoPoint",
    "PayoffTable",
    "PayoffError",
    "SkippedCell",
    "SweepResult",
    "payoff_table",
    "epsilon_grid",
    "epsilon_sweep",
    "solve_cell",
    "filter_nondominated",
    "export_front",
    "load_front",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("eps2", "eps3", "z1", "z2", "z3", "open_collection", "open_reprocessing")
_FORMAT_TAG = "maskloop-front"

Distances = tuple[DistanceMatrix, DistanceMatrix]


class PayoffError(RuntimeError):
    """A single-objective solve behind the payoff table did not reach optimality."""

    def __init__(self, objective: Objective, status: MilpStatus):
        super().__init__(f"objective {objective.value} could not be solved: {status.value}")
        self.objective = objective
        self.status = status


@dataclass(frozen=True, eq=False)
class ParetoPoint:
    eps2: float
    eps3: float
    triple: ObjectiveTriple
    open_collection: tuple[str, ...]
    open_reprocessing: tuple[str, ...]
    solution: Solution

    def __post_init__(self) -> None:
        object.__setattr__(self, "open_collection", tuple(sorted(self.open_collection)))
        object.__setattr__(self, "open_reprocessing", tuple(sorted(self.open_reprocessing)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParetoPoint):
            return NotImplemented
        return (
            _same(self.eps2, other.eps2)
            and _same(self.eps3, other.eps3)
            and (self.triple, self.open_collection, self.open_reprocessing)
            == (other.triple, other.open_collection, other.open_reprocessing)
            and self.solution == other.solution
        )

    __hash__ = None


def _same(a: float, b: float) -> bool:
    # an unset bound is stored as NaN
    return a == b or (math.isnan(a) and math.isnan(b))


@dataclass(frozen=True)
class SkippedCell:
    eps2: float
    eps3: float
    status: MilpStatus


@dataclass(frozen=True)
class PayoffTable:
    """Row ``i`` holds all three objectives at the optimum of objective ``i`` alone."""

    rows: tuple[ObjectiveTriple, ObjectiveTriple, ObjectiveTriple]
    solutions: tuple[Solution, Solution, Solution] = field(repr=False, compare=False)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([r.as_tuple() for r in self.rows])

    def column_range(self, objective: Objective | str) -> tuple[float, float]:
        col = self.matrix[:, _index(objective)]
        return float(col.min()), float(col.max())

    def diagonal_dominant(self, rel_tol: float = 1e-6) -> bool:
        M = self.matrix
        return all(
            M[i, i] >= M[:, i].max() - rel_tol * max(1.0, abs(M[:, i].max())) for i in range(3)
        )


@dataclass
class SweepResult:
    """Feasible grid points (sorted by ``(eps2, eps3)``) plus the cells that yielded none."""

    points: list[ParetoPoint]
    skipped: list[SkippedCell]
    payoff: PayoffTable
    grid2: tuple[float, ...]
    grid3: tuple[float, ...]

    def __iter__(self) -> Iterator[ParetoPoint]:
        return iter(self.points)

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> ParetoPoint:
        return self.points[i]


def _index(objective: Objective | str) -> int:
    return ("Z1", "Z2", "Z3").index(Objective.parse(objective).value)


def _point(inst: Instance, dist: Distances, lay: VariableLayout, values: np.ndarray,
           eps2: float, eps3: float) -> ParetoPoint:
    raw = Solution(lay, values)
    triple = evaluate_solution(inst, dist[0], dist[1], raw)
    sol = Solution(lay, values, triple)
    return ParetoPoint(eps2, eps3, triple, tuple(sol.open_collection(inst)), tuple(sol.open_reprocessing(inst)), sol)


def payoff_table(inst: Instance, distances: Distances, opts: SolveOptions = SolveOptions()) -> PayoffTable:
    rows, sols = [], []
    for obj in Objective:
        problem, lay = build_circular_model(inst, distances[0], distances[1], obj)
        res = solve_milp(problem, opts)
        log.info("payoff %s: %s after %d nodes", obj.value, res.status.value, res.nodes_explored)
        if not res.optimal:
            raise PayoffError(obj, res.status)
        p = _point(inst, distances, lay, res.values, math.nan, math.nan)
        rows.append(p.triple)
        sols.append(p.solution)
    return PayoffTable(tuple(rows), tuple(sols))


def epsilon_grid(lo: float, hi: float, n: int) -> tuple[float, ...]:
    """``n`` evenly spaced values from ``lo`` to ``hi`` inclusive; ``(lo,)`` when n = 1."""
    if n < 1:
        raise ValueError("grid count must be at least 1")
    if n == 1:
        return (float(lo),)
    return tuple(float(v) for v in np.linspace(lo, hi, n))


def solve_cell(inst: Instance, distances: Distances, eps2: float, eps3: float,
               opts: SolveOptions = SolveOptions()) -> Union[ParetoPoint, SkippedCell]:
    """Maximize Z1 subject to ``Z2 >= eps2`` and ``Z3 >= eps3``."""
    problem, lay = build_circular_model(inst, distances[0], distances[1], Objective.Z1, eps2=eps2, eps3=eps3)
    res = solve_milp(problem, opts)
    log.info("cell eps2=%.6f eps3=%.6f: %s after %d nodes", eps2, eps3, res.status.value, res.nodes_explored)
    if res.values is None:
        return SkippedCell(eps2, eps3, res.status)
    return _point(inst, distances, lay, res.values, eps2, eps3)


def _solve_cell_args(args):
    return solve_cell(*args)


def epsilon_sweep(inst: Instance, distances: Distances, n2: int = 4, n3: int = 4,
                  opts: SolveOptions = SolveOptions(), workers: int = 1,
                  payoff: Optional[PayoffTable] = None) -> SweepResult:
    """Solve every cell of an ``n2 x n3`` epsilon grid.

    With ``workers > 1`` cells are solved in separate processes; the result
    is sorted the same way, so only ties between equally good solutions may
    differ from a sequential run.
    """
    if n2 < 1 or n3 < 1:
        raise ValueError("grid counts must be at least 1")
    payoff = payoff or payoff_table(inst, distances, opts)
    grid2 = epsilon_grid(*payoff.column_range(Objective.Z2), n2)
    grid3 = epsilon_grid(*payoff.column_range(Objective.Z3), n3)
    cells = [(e2, e3) for e2 in grid2 for e3 in grid3]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_solve_cell_args, [(inst, distances, e2, e3, opts) for e2, e3 in cells]))
    else:
        outcomes = [solve_cell(inst, distances, e2, e3, opts) for e2, e3 in cells]
    points = [o for o in outcomes if isinstance(o, ParetoPoint)]
    skipped = [o for o in outcomes if isinstance(o, SkippedCell)]
    points.sort(key=lambda p: (p.eps2, p.eps3))
    skipped.sort(key=lambda s: (s.eps2, s.eps3))
    return SweepResult(points, skipped, payoff, grid2, grid3)


def _triple_of(p) -> tuple[float, float, float]:
    t = getattr(p, "triple", p)
    return tuple(float(v) for v in t)


def filter_nondominated(points: Iterable) -> list:
    """Drop every point strictly dominated by another; equal triples all survive.

    Accepts :class:`ParetoPoint` objects or bare ``(z1, z2, z3)`` triples.
    """
    pts = list(points)
    if not pts:
        return []
    T = np.array([_triple_of(p) for p in pts])
    geq = np.all(T[:, None, :] >= T[None, :, :], axis=2)  # geq[a, b]: a >= b everywhere
    gt = np.any(T[:, None, :] > T[None, :, :], axis=2)
    dominated = np.any(geq & gt, axis=0)
    return [p for p, d in zip(pts, dominated) if not d]


# --------------------------------------------------------------------------
# export


def _csv_bytes(points: Sequence[ParetoPoint]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in points:
        writer.writerow([
            *(f"{v:.6f}" for v in (p.eps2, p.eps3, *p.triple)),
            ";".join(p.open_collection),
            ";".join(p.open_reprocessing),
        ])
    return buf.getvalue().encode("utf-8")


def _json_bytes(points: Sequence[ParetoPoint]) -> bytes:
    doc = {
        "format": _FORMAT_TAG,
        "version": 1,
        "points": [
            {
                "eps2": None if math.isnan(p.eps2) else p.eps2,
                "eps3": None if math.isnan(p.eps3) else p.eps3,
                "triple": {"z1": p.triple.z1, "z2": p.triple.z2, "z3": p.triple.z3},
                "open_collection": list(p.open_collection),
                "open_reprocessing": list(p.open_reprocessing),
                "solution": {
                    "n_hospitals": p.solution.layout.n_hospitals,
                    "n_sites": p.solution.layout.n_sites,
                    "n_disposal": p.solution.layout.n_disposal,
                    "values": p.solution.values.tolist(),
                },
            }
            for p in points
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def export_front(points: Sequence[ParetoPoint], destination: Union[str, os.PathLike, IO, None] = None,
                 fmt: str = "csv") -> bytes:
    """Serialize ``points`` as CSV or as JSON with full solutions; optionally write them out."""
    points = list(points)
    if not points:
        raise ValueError("cannot export an empty front")
    if fmt == "csv":
        data = _csv_bytes(points)
    elif fmt == "json":
        data = _json_bytes(points)
    else:
        raise ValueError(f"unknown export format {fmt!r}; use 'csv' or 'json'")
    if destination is None:
        return data
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)
    return data


def load_front(source: Union[str, os.PathLike, IO, bytes]) -> list[ParetoPoint]:
    """Read points written by ``export_front(..., fmt="json")``."""
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif hasattr(source, "read"):
        raw = source.read()
    else:
        with open(source, "rb") as fh:
            raw = fh.read()
    doc = json.loads(raw)
    if not isinstance(doc, dict) or doc.get("format") != _FORMAT_TAG:
        raise ValueError("not a front file")
    out = []
    for item in doc["points"]:
        s = item["solution"]
        lay = VariableLayout(s["n_hospitals"], s["n_sites"], s["n_disposal"])
        t = item["triple"]
        triple = ObjectiveTriple(t["z1"], t["z2"], t["z3"])
        sol = Solution(lay, np.array(s["values"], dtype=float), triple)
        eps2, eps3 = (math.nan if item[k] is None else float(item[k]) for k in ("eps2", "eps3"))
        out.append(ParetoPoint(eps2, eps3, triple,
                               tuple(item["open_collection"]), tuple(item["open_reprocessing"]), sol))
    return out

"""Best-bound branch-and-bound over binary columns."""
from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from ..formulation import MilpProblem
from .simplex import LpEngine, LpResult, LpStatus, NumericalError

log = logging.getLogger(__name__)

__all__ = ["MilpStatus", "MilpResult", "SolveOptions", "solve_milp", "UnboundedRelaxation"]


class UnboundedRelaxation(NumericalError):
    """The LP relaxation is unbounded, so branch-and-bound has no bound to work with."""


class MilpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    GAP_LIMIT = "GapLimit"
    NODE_LIMIT = "NodeLimit"


@dataclass(frozen=True)
class SolveOptions:
    integrality_tol: float = 1e-6
    relative_gap: float = 1e-6
    node_limit: int = 1_000_000
    time_limit_seconds: Optional[float] = None
    # honour MilpProblem.priority; False gives plain most-fractional branching
    use_priority: bool = True
    # "pseudocost" scores candidates by observed bound loss; "fractional" is plain most-fractional
    branching: str = "pseudocost"

    def __post_init__(self) -> None:
        if self.integrality_tol <= 0 or self.relative_gap < 0 or self.node_limit < 1:
            raise ValueError("tolerances must be positive and node_limit >= 1")
        if self.time_limit_seconds is not None and self.time_limit_seconds <= 0:
            raise ValueError("time_limit_seconds must be positive")
        if self.branching not in ("pseudocost", "fractional"):
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class MilpResult:
    status: MilpStatus
    values: Optional[np.ndarray]
    objective: float
    best_bound: float
    nodes_explored: int
    lp_iterations: int = 0
    # best bound after each node, for auditing monotonicity
    bound_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is MilpStatus.OPTIMAL

    @property
    def gap(self) -> float:
        if self.values is None:
            return math.inf
        return abs(self.best_bound - self.objective) / max(1.0, abs(self.objective))


@dataclass(order=True)
class _Node:
    key: float  # -bound for maximization, bound for minimization
    seq: int  # negated insertion counter: newest first among equal keys
    fixings: tuple[tuple[int, float], ...] = field(compare=False)
    bound: float = field(compare=False)
    # parent LP value and the fractional part that was branched on, for pseudocosts
    parent_obj: float = field(compare=False, default=math.nan)
    branch_frac: float = field(compare=False, default=math.nan)


def _gap_closed(bound: float, incumbent: float, rel: float, maximize: bool) -> bool:
    diff = bound - incumbent if maximize else incumbent - bound
    return diff <= rel * max(1.0, abs(incumbent))


def _has_integral_objective(problem: MilpProblem) -> bool:
    """True when every feasible integer point has an integer objective value."""
    c = problem.objective
    nz = c != 0
    return bool(
        np.all(problem.integer[nz])
        and np.all(c[nz] == np.round(c[nz]))
        and float(problem.constant).is_integer()
    )


def _branch_column(binaries: np.ndarray, frac: np.ndarray, prio: Optional[np.ndarray], tol: float,
                   scores: Optional[np.ndarray] = None) -> int:
    """Best-scoring fractional binary within the highest priority class that has one.

    Without ``scores`` the score is fractionality. Ties go to the lowest index.
    """
    frac = np.round(frac, 12)
    score = frac if scores is None else np.round(scores, 9)
    eligible = frac > tol
    if prio is not None:
        eligible &= prio == prio[eligible].max()
    # argmax returns the first maximum
    return int(binaries[np.argmax(np.where(eligible, score, -1.0))])


class _Pseudocosts:
    """Average objective loss per unit of rounding, per binary and direction."""

    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.count = np.zeros((2, n), dtype=np.int64)

    def record(self, k: int, up: bool, frac: float, loss: float) -> None:
        dist = 1.0 - frac if up else frac
        if dist > 1e-9:
            self.sum[int(up), k] += max(loss, 0.0) / dist
            self.count[int(up), k] += 1

    def scores(self, vals: np.ndarray) -> Optional[np.ndarray]:
        if not self.count.any():
            return None
        known = self.count > 0
        mean = np.where(known, self.sum / np.maximum(self.count, 1), 0.0)
        fill = np.array([mean[d][known[d]].mean() if known[d].any() else 1.0 for d in (0, 1)])
        psi = np.where(known, mean, fill[:, None])
        down = np.maximum(psi[0] * vals, 1e-6)
        up = np.maximum(psi[1] * (1.0 - vals), 1e-6)
        return down * up


def solve_milp(problem: MilpProblem, opts: SolveOptions = SolveOptions(),
               lp_solver: Optional[Callable[[np.ndarray, np.ndarray], LpResult]] = None) -> MilpResult:
    """Solve ``problem`` exactly (to ``opts.relative_gap``) by LP-based branch-and-bound.

    Node selection is best-bound; among nodes with equal bounds the most
    recently created is taken first, which keeps the search diving on bound
    plateaus.  Branching considers the binaries of the highest
    ``problem.priority`` class that still has a fractional member and picks
    the one with the best pseudocost score (the product of the average
    per-unit bound losses seen on its down and up branches).  Until any loss
    has been observed, and always under ``branching="fractional"``, the most
    fractional binary is taken.  Ties go to the lowest column.  The up-branch
    is queued before the down-branch.
    """
    if problem.n_vars < 1:
        raise ValueError("problem has no variables")
    started = time.monotonic()
    solve = lp_solver or LpEngine(problem).solve
    maximize = problem.maximize
    sgn = 1.0 if maximize else -1.0
    binaries = np.flatnonzero(problem.integer)
    tol = opts.integrality_tol
    integral_objective = _has_integral_objective(problem)
    prio = problem.priority[binaries] if opts.use_priority and problem.priority is not None else None
    pseudo = _Pseudocosts(len(binaries)) if opts.branching == "pseudocost" else None

    incumbent: Optional[np.ndarray] = None
    inc_obj = -math.inf * sgn
    nodes = 0
    lp_iters = 0
    trace: list[float] = []
    heap: list[_Node] = []
    seq = 0
    heapq.heappush(heap, _Node(-sgn * math.inf, seq, (), sgn * math.inf))
    status = MilpStatus.OPTIMAL
    best_bound = sgn * math.inf

    def open_bound() -> float:
        return heap[0].bound if heap else -sgn * math.inf

    while heap:
        node = heap[0]
        if incumbent is not None and _gap_closed(node.bound, inc_obj, opts.relative_gap, maximize):
            break
        if nodes >= opts.node_limit:
            status = MilpStatus.NODE_LIMIT
            break
        if opts.time_limit_seconds is not None and time.monotonic() - started > opts.time_limit_seconds:
            status = MilpStatus.GAP_LIMIT
            break
        heapq.heappop(heap)

        lower = problem.lower.copy()
        upper = problem.upper.copy()
        for col, val in node.fixings:
            lower[col] = upper[col] = val
        res = solve(lower, upper)
        nodes += 1
        lp_iters += res.iterations
        if res.status is LpStatus.UNBOUNDED:
            raise UnboundedRelaxation("LP relaxation is unbounded")
        if pseudo is not None and res.status is LpStatus.OPTIMAL and node.fixings:
            col, val = node.fixings[-1]
            k = int(np.searchsorted(binaries, col))
            pseudo.record(k, val == 1.0, node.branch_frac, sgn * (node.parent_obj - res.objective))
        if res.status is LpStatus.OPTIMAL:
            # a child can never beat its parent's relaxation
            bound = min(res.objective, node.bound) if maximize else max(res.objective, node.bound)
            prune_bound = bound
            if integral_objective:
                prune_bound = math.floor(bound + 1e-6) if maximize else math.ceil(bound - 1e-6)
            bound = prune_bound
            if incumbent is None or sgn * (bound - inc_obj) > opts.relative_gap * max(1.0, abs(inc_obj)):
                vals = res.values
                frac = np.abs(vals[binaries] - np.round(vals[binaries]))
                if len(binaries) == 0 or frac.max() <= tol:
                    vals = vals.copy()
                    vals[binaries] = np.round(vals[binaries])
                    obj = problem.objective_value(vals)
                    if incumbent is None or sgn * (obj - inc_obj) > 0:
                        incumbent, inc_obj = vals, obj
                else:
                    bv = vals[binaries]
                    pick = _branch_column(binaries, frac, prio, tol, pseudo.scores(bv) if pseudo else None)
                    for val in (1.0, 0.0):
                        seq += 1
                        heapq.heappush(heap, _Node(-sgn * bound, -seq, node.fixings + ((pick, val),), bound,
                                                   res.objective, float(vals[pick])))

        current = open_bound()
        if incumbent is not None:
            current = max(current, inc_obj) if maximize else min(current, inc_obj)
        best_bound = min(best_bound, current) if maximize else max(best_bound, current)
        trace.append(best_bound)
        if nodes % 200 == 0:
            log.debug("%d nodes, %d open, bound %.6g, incumbent %.6g", nodes, len(heap), best_bound, inc_obj)

    if incumbent is None:
        if status is MilpStatus.OPTIMAL:
            return MilpResult(MilpStatus.INFEASIBLE, None, math.nan, math.nan, nodes, lp_iters, trace)
        return MilpResult(status, None, math.nan, best_bound, nodes, lp_iters, trace)
    return MilpResult(status, incumbent, inc_obj, best_bound, nodes, lp_iters, trace)

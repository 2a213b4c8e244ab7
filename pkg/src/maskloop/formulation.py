"""Linearized tri-objective MILP for the circular mask network.

Variables (all indexed over the instance's hospitals i, candidate sites j/k
and disposal sites m):

    x[j]     open a collection centre at site j            binary
    w[k]     open a reprocessing centre at site k          binary
    y[i, j]  hospital i sends to collection centre j       binary
    z[j, k]  collection centre j sends to reprocessing k   binary
    f[i, j]  masks shipped hospital i -> centre j          >= 0
    g[j, k]  masks shipped collection j -> reprocessing k  >= 0
    q[j]     masks handled at collection centre j          >= 0
    r[k]     masks reprocessed at centre k                 >= 0
    d[m]     masks sent to disposal site m                 >= 0

The per-unit operating costs/emissions are charged on the aggregates ``q`` and
``r``; the arc flows ``f``/``g`` are tied to the assignment binaries through
big-M rows, which replaces the products of quantities and assignments.
Transport is charged once per opened arc (distance times per-km rate).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .geo import DistanceMatrix
from .instance import Instance

__all__ = [
    "Objective",
    "Sense",
    "VariableLayout",
    "MilpProblem",
    "ObjectiveTriple",
    "Solution",
    "FeasibilityViolation",
    "ModelError",
    "objective_coefficients",
    "build_circular_model",
    "evaluate_solution",
    "check_feasibility",
    "write_lp",
]


class ModelError(ValueError):
    pass


class Objective(str, Enum):
    Z1 = "Z1"  # profit, CAD
    Z2 = "Z2"  # net environmental advantage, kg CO2
    Z3 = "Z3"  # jobs created

    @classmethod
    def parse(cls, value: "Objective | str") -> "Objective":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ModelError(f"unknown objective {value!r}; expected Z1, Z2 or Z3") from None


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


class VariableLayout:
    """Column indices of every model variable.

    Index arrays are shaped like the entity sets, e.g. ``layout.y[i, j]`` is the
    column of the hospital i -> collection centre j assignment.
    """

    BLOCKS = ("x", "w", "y", "z", "f", "g", "q", "r", "d")

    def __init__(self, n_hospitals: int, n_sites: int, n_disposal: int):
        self.n_hospitals, self.n_sites, self.n_disposal = n_hospitals, n_sites, n_disposal
        I, J, M = n_hospitals, n_sites, n_disposal
        shapes = {
            "x": (J,), "w": (J,), "y": (I, J), "z": (J, J),
            "f": (I, J), "g": (J, J), "q": (J,), "r": (J,), "d": (M,),
        }
        start = 0
        for name in self.BLOCKS:
            size = int(np.prod(shapes[name]))
            idx = np.arange(start, start + size).reshape(shapes[name])
            idx.setflags(write=False)
            setattr(self, name, idx)
            start += size
        self.n_vars = start

    @property
    def binary_columns(self) -> np.ndarray:
        return np.concatenate([self.x.ravel(), self.w.ravel(), self.y.ravel(), self.z.ravel()])

    def name(self, col: int) -> str:
        for block in self.BLOCKS:
            idx = getattr(self, block)
            if idx.ravel()[0] <= col <= idx.ravel()[-1]:
                pos = np.unravel_index(col - idx.ravel()[0], idx.shape)
                return f"{block}_" + "_".join(str(p + 1) for p in pos)
        raise IndexError(col)

    def names(self) -> list[str]:
        return [self.name(c) for c in range(self.n_vars)]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VariableLayout) and (
            (self.n_hospitals, self.n_sites, self.n_disposal)
            == (other.n_hospitals, other.n_sites, other.n_disposal)
        )

    def __repr__(self) -> str:
        return f"VariableLayout(I={self.n_hospitals}, J={self.n_sites}, M={self.n_disposal}, n_vars={self.n_vars})"


@dataclass(frozen=True)
class MilpProblem:
    """``maximize/minimize c @ v + constant`` subject to ``A @ v (sense) rhs``.

    ``A`` is a CSR matrix with one row per constraint; ``senses`` holds
    :class:`Sense` values.  Binary columns carry ``integer=True`` and bounds [0, 1].
    """

    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    A: sp.csr_matrix
    senses: tuple[Sense, ...]
    rhs: np.ndarray
    objective: np.ndarray
    maximize: bool = True
    constant: float = 0.0
    row_names: tuple[str, ...] = ()
    var_names: tuple[str, ...] = ()
    # optional branching priority per column; higher classes are branched on first
    priority: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        n = len(self.lower)
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        integer = np.asarray(self.integer, dtype=bool)
        c = np.asarray(self.objective, dtype=float)
        A = sp.csr_matrix(self.A, dtype=float)
        rhs = np.asarray(self.rhs, dtype=float)
        senses = tuple(Sense(s) for s in self.senses)
        if not (len(upper) == len(integer) == len(c) == n):
            raise ModelError("bounds, integrality and objective must all have n_vars entries")
        if A.shape[1] != n or A.shape[0] != len(rhs) or len(senses) != len(rhs):
            raise ModelError(f"constraint matrix {A.shape} inconsistent with {n} vars / {len(rhs)} rows")
        if np.any(lower > upper):
            raise ModelError("lower bound above upper bound")
        if np.any(integer & ((lower < 0) | (upper > 1))):
            raise ModelError("only binary integer variables are supported")
        for arr in (lower, upper, integer, c, rhs):
            arr.setflags(write=False)
        for name, val in (("lower", lower), ("upper", upper), ("integer", integer),
                          ("objective", c), ("A", A), ("rhs", rhs), ("senses", senses)):
            object.__setattr__(self, name, val)
        if self.priority is not None:
            prio = np.asarray(self.priority, dtype=np.int64)
            if prio.shape != (n,):
                raise ModelError("priority must have n_vars entries")
            prio.setflags(write=False)
            object.__setattr__(self, "priority", prio)
        object.__setattr__(self, "row_names", tuple(self.row_names))
        object.__setattr__(self, "var_names", tuple(self.var_names))

    @property
    def n_vars(self) -> int:
        return len(self.lower)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def constraints(self) -> Iterator[tuple[dict[int, float], Sense, float]]:
        """Rows as ``({column: coefficient}, sense, rhs)`` triples."""
        A = self.A
        for i in range(A.shape[0]):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            row = dict(zip(A.indices[lo:hi].tolist(), A.data[lo:hi].tolist()))
            yield row, self.senses[i], float(self.rhs[i])

    def objective_value(self, values: Sequence[float]) -> float:
        return float(np.dot(self.objective, np.asarray(values, dtype=float)) + self.constant)

    def with_rows(self, rows: Sequence[tuple[dict[int, float], Sense | str, float]],
                  names: Sequence[str] = ()) -> "MilpProblem":
        """Copy of the problem with extra constraint rows appended."""
        if not rows:
            return self
        data, cols, ptr = [], [], [0]
        for coefs, _, _ in rows:
            cols.extend(coefs.keys())
            data.extend(coefs.values())
            ptr.append(len(cols))
        extra = sp.csr_matrix((data, cols, ptr), shape=(len(rows), self.n_vars))
        names = list(names) or [f"extra_{i + 1}" for i in range(len(rows))]
        return MilpProblem(
            lower=self.lower, upper=self.upper, integer=self.integer,
            A=sp.vstack([self.A, extra], format="csr"),
            senses=self.senses + tuple(Sense(s) for _, s, _ in rows),
            rhs=np.concatenate([self.rhs, [r for _, _, r in rows]]),
            objective=self.objective, maximize=self.maximize, constant=self.constant,
            row_names=self.row_names + tuple(names), var_names=self.var_names,
            priority=self.priority,
        )


@dataclass(frozen=True)
class ObjectiveTriple:
    z1: float  # CAD
    z2: float  # kg CO2 (net advantage)
    z3: float  # jobs

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.z1, self.z2, self.z3)

    def __getitem__(self, i: int) -> float:
        return self.as_tuple()[i]

    def __iter__(self):
        return iter(self.as_tuple())


@dataclass(frozen=True, eq=False)
class Solution:
    layout: VariableLayout
    values: np.ndarray
    triple: Optional[ObjectiveTriple] = None

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Solution)
            and self.layout == other.layout
            and np.array_equal(self.values, other.values)
            and self.triple == other.triple
        )

    __hash__ = None

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        if vals.shape != (self.layout.n_vars,):
            raise ModelError(f"solution has {vals.shape} values, layout expects {self.layout.n_vars}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def block(self, name: str) -> np.ndarray:
        return self.values[getattr(self.layout, name)]

    def open_collection(self, inst: Instance) -> list[str]:
        return [s.id for s, v in zip(inst.sites, self.block("x")) if v > 0.5]

    def open_reprocessing(self, inst: Instance) -> list[str]:
        return [s.id for s, v in zip(inst.sites, self.block("w")) if v > 0.5]

    @property
    def collected(self) -> float:
        return math.fsum(self.block("q"))

    @property
    def reprocessed(self) -> float:
        return math.fsum(self.block("r"))

    @property
    def disposed(self) -> float:
        return math.fsum(self.block("d"))


# --------------------------------------------------------------------------
# model construction


def _check_dims(inst: Instance, D_hs: DistanceMatrix, D_ss: DistanceMatrix) -> None:
    I, J = len(inst.hospitals), len(inst.sites)
    if D_hs.shape != (I, J):
        raise ModelError(f"hospital->site matrix is {D_hs.shape}, expected {(I, J)}")
    if D_ss.shape != (J, J):
        raise ModelError(f"site->site matrix is {D_ss.shape}, expected {(J, J)}")


def objective_coefficients(inst: Instance, D_hs: DistanceMatrix, D_ss: DistanceMatrix,
                           objective: Objective | str, layout: Optional[VariableLayout] = None) -> np.ndarray:
    """Coefficient row (maximization form) of the chosen objective."""
    objective = Objective.parse(objective)
    _check_dims(inst, D_hs, D_ss)
    lay = layout or VariableLayout(len(inst.hospitals), len(inst.sites), len(inst.disposal_sites))
    p = inst.params
    sites = inst.sites
    c = np.zeros(lay.n_vars)
    if objective is Objective.Z1:
        c[lay.x] = [-s.fixed_cost_collection for s in sites]
        c[lay.w] = [-s.fixed_cost_reprocessing for s in sites]
        c[lay.y] = -p.transport_cost_per_km * D_hs.km
        c[lay.z] = -p.transport_cost_per_km * D_ss.km
        c[lay.q] = [-s.unit_cost_collection for s in sites]
        c[lay.r] = [p.price - s.unit_cost_reprocessing for s in sites]
        c[lay.d] = [-dm.unit_cost for dm in inst.disposal_sites]
    elif objective is Objective.Z2:
        c[lay.x] = [-s.fixed_emission_collection for s in sites]
        c[lay.w] = [-s.fixed_emission_reprocessing for s in sites]
        c[lay.y] = -p.truck_emission_per_km * D_hs.km
        c[lay.z] = -p.truck_emission_per_km * D_ss.km
        c[lay.q] = [-s.unit_emission_collection for s in sites]
        c[lay.r] = [p.production_emission - s.unit_emission_reprocessing for s in sites]
        c[lay.d] = [-dm.unit_emission for dm in inst.disposal_sites]
    else:
        c[lay.x] = [s.jobs_collection for s in sites]
        c[lay.w] = [s.jobs_reprocessing for s in sites]
    return c


class _Rows:
    def __init__(self) -> None:
        self.data: list[float] = []
        self.cols: list[int] = []
        self.ptr: list[int] = [0]
        self.senses: list[Sense] = []
        self.rhs: list[float] = []
        self.names: list[str] = []

    def add(self, name: str, coefs: Sequence[tuple[int, float]], sense: Sense, rhs: float) -> None:
        for col, val in coefs:
            if val != 0.0:
                self.cols.append(int(col))
                self.data.append(float(val))
        self.ptr.append(len(self.cols))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.names.append(name)

    def matrix(self, n: int) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.cols, self.ptr), shape=(len(self.rhs), n))


def build_circular_model(
    inst: Instance,
    D_hs: DistanceMatrix,
    D_ss: DistanceMatrix,
    objective: Objective | str = Objective.Z1,
    eps2: Optional[float] = None,
    eps3: Optional[float] = None,
) -> tuple[MilpProblem, VariableLayout]:
    """Build the maximization MILP for one objective, optionally with
    lower bounds ``Z2 >= eps2`` and ``Z3 >= eps3`` appended as rows."""
    objective = Objective.parse(objective)
    _check_dims(inst, D_hs, D_ss)
    for label, eps in (("eps2", eps2), ("eps3", eps3)):
        if eps is not None and not math.isfinite(eps):
            raise ModelError(f"{label} must be finite")
    if eps3 is not None and eps3 < 0:
        raise ModelError("eps3 is a lower bound on a job count and must be >= 0")

    I, J, M = len(inst.hospitals), len(inst.sites), len(inst.disposal_sites)
    lay = VariableLayout(I, J, M)
    p = inst.params
    usage = [h.usage for h in inst.hospitals]
    alpha, beta = p.alpha, p.beta
    big_m_g = beta * alpha * math.fsum(usage)

    lower = np.zeros(lay.n_vars)
    upper = np.full(lay.n_vars, np.inf)
    integer = np.zeros(lay.n_vars, dtype=bool)
    binaries = lay.binary_columns
    upper[binaries] = 1.0
    integer[binaries] = True

    rows = _Rows()
    LE, EQ, GE = Sense.LE, Sense.EQ, Sense.GE
    x, w, y, z, f, g, q, r, d = (getattr(lay, b) for b in VariableLayout.BLOCKS)

    for i in range(I):
        for j in range(J):
            rows.add(f"link_y_{i + 1}_{j + 1}", [(y[i, j], 1.0), (x[j], -1.0)], LE, 0.0)
    for j in range(J):
        for k in range(J):
            rows.add(f"link_z_{j + 1}_{k + 1}", [(z[j, k], 1.0), (w[k], -1.0)], LE, 0.0)
    for i in range(I):
        rows.add(f"assign_hospital_{i + 1}", [(y[i, j], 1.0) for j in range(J)], GE, 1.0)
    for j in range(J):
        rows.add(f"assign_collection_{j + 1}", [(z[j, k], 1.0) for k in range(J)] + [(x[j], -1.0)], GE, 0.0)
    rows.add(
        "budget",
        [(x[j], s.fixed_cost_collection) for j, s in enumerate(inst.sites)]
        + [(w[k], s.fixed_cost_reprocessing) for k, s in enumerate(inst.sites)],
        LE,
        p.budget,
    )
    for i in range(I):
        rows.add(f"collect_{i + 1}", [(f[i, j], 1.0) for j in range(J)], EQ, alpha * usage[i])
    for i in range(I):
        for j in range(J):
            rows.add(f"flow_f_{i + 1}_{j + 1}", [(f[i, j], 1.0), (y[i, j], -alpha * usage[i])], LE, 0.0)
    for j in range(J):
        rows.add(f"total_q_{j + 1}", [(q[j], 1.0)] + [(f[i, j], -1.0) for i in range(I)], EQ, 0.0)
    for j in range(J):
        rows.add(f"reprocess_{j + 1}", [(g[j, k], 1.0) for k in range(J)] + [(q[j], -beta)], EQ, 0.0)
    for j in range(J):
        for k in range(J):
            rows.add(f"flow_g_{j + 1}_{k + 1}", [(g[j, k], 1.0), (z[j, k], -big_m_g)], LE, 0.0)
    for k in range(J):
        rows.add(f"total_r_{k + 1}", [(r[k], 1.0)] + [(g[j, k], -1.0) for j in range(J)], EQ, 0.0)
    rows.add(
        "disposal",
        [(d[m], 1.0) for m in range(M)] + [(q[j], -1.0) for j in range(J)] + [(r[k], 1.0) for k in range(J)],
        EQ,
        0.0,
    )

    if eps2 is not None:
        c2 = objective_coefficients(inst, D_hs, D_ss, Objective.Z2, lay)
        rows.add("eps_Z2", [(col, v) for col, v in enumerate(c2) if v != 0.0], GE, eps2)
    if eps3 is not None:
        c3 = objective_coefficients(inst, D_hs, D_ss, Objective.Z3, lay)
        rows.add("eps_Z3", [(col, v) for col, v in enumerate(c3) if v != 0.0], GE, eps3)

    # open/close decisions drive the assignment binaries, so branch on them first
    priority = np.zeros(lay.n_vars, dtype=np.int64)
    priority[lay.x] = priority[lay.w] = 1

    problem = MilpProblem(
        lower=lower,
        upper=upper,
        integer=integer,
        A=rows.matrix(lay.n_vars),
        senses=tuple(rows.senses),
        rhs=np.array(rows.rhs),
        objective=objective_coefficients(inst, D_hs, D_ss, objective, lay),
        maximize=True,
        row_names=tuple(rows.names),
        var_names=tuple(lay.names()),
        priority=priority,
    )
    return problem, lay


# --------------------------------------------------------------------------
# independent evaluation and audit


def _layout_for(inst: Instance, sol: Solution) -> VariableLayout:
    lay = sol.layout
    if (lay.n_hospitals, lay.n_sites, lay.n_disposal) != (
        len(inst.hospitals), len(inst.sites), len(inst.disposal_sites)
    ):
        raise ModelError(f"solution layout {lay!r} does not match the instance")
    return lay


def evaluate_solution(inst: Instance, D_hs: DistanceMatrix, D_ss: DistanceMatrix,
                      sol: Solution) -> ObjectiveTriple:
    """Profit, net CO2 advantage and jobs of ``sol``, summed term by term.

    Feasibility is not checked.
    """
    _check_dims(inst, D_hs, D_ss)
    _layout_for(inst, sol)
    p = inst.params
    x, w, y, z = (sol.block(b) for b in ("x", "w", "y", "z"))
    q, r, d = sol.block("q"), sol.block("r"), sol.block("d")
    I, J = y.shape
    sites, disp = inst.sites, inst.disposal_sites

    fixed_cost = math.fsum(s.fixed_cost_collection * x[j] for j, s in enumerate(sites)) + math.fsum(
        s.fixed_cost_reprocessing * w[k] for k, s in enumerate(sites)
    )
    transport_km = math.fsum(D_hs.km[i, j] * y[i, j] for i in range(I) for j in range(J)) + math.fsum(
        D_ss.km[j, k] * z[j, k] for j in range(J) for k in range(J)
    )
    variable_cost = (
        p.transport_cost_per_km * transport_km
        + math.fsum(s.unit_cost_collection * q[j] for j, s in enumerate(sites))
        + math.fsum(s.unit_cost_reprocessing * r[k] for k, s in enumerate(sites))
        + math.fsum(dm.unit_cost * d[m] for m, dm in enumerate(disp))
    )
    revenue = p.price * math.fsum(r)
    z1 = revenue - fixed_cost - variable_cost

    recovery = p.production_emission * math.fsum(r)
    footprint = (
        p.truck_emission_per_km * transport_km
        + math.fsum(s.fixed_emission_collection * x[j] for j, s in enumerate(sites))
        + math.fsum(s.fixed_emission_reprocessing * w[k] for k, s in enumerate(sites))
        + math.fsum(s.unit_emission_collection * q[j] for j, s in enumerate(sites))
        + math.fsum(s.unit_emission_reprocessing * r[k] for k, s in enumerate(sites))
        + math.fsum(dm.unit_emission * d[m] for m, dm in enumerate(disp))
    )
    z2 = recovery - footprint

    z3 = math.fsum(s.jobs_collection * x[j] for j, s in enumerate(sites)) + math.fsum(
        s.jobs_reprocessing * w[k] for k, s in enumerate(sites)
    )
    if abs(z3 - round(z3)) <= 1e-6:
        z3 = float(round(z3))
    return ObjectiveTriple(z1, z2, z3)


@dataclass(frozen=True)
class FeasibilityViolation:
    family: str
    index: tuple
    residual: float

    def __str__(self) -> str:
        where = ",".join(str(i) for i in self.index)
        return f"{self.family}[{where}] residual {self.residual:.6g}"


def check_feasibility(inst: Instance, D_hs: DistanceMatrix, D_ss: DistanceMatrix,
                      sol: Solution, tol: float = 1e-6) -> list[FeasibilityViolation]:
    """Audit ``sol`` against every model constraint.

    Inequalities are violated when they miss by more than ``tol``; the
    flow-conservation equalities use ``tol`` relative to the collected volume
    (at least 1).  Residuals are reported as the amount of violation.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_dims(inst, D_hs, D_ss)
    _layout_for(inst, sol)
    p = inst.params
    x, w, y, z = (sol.block(b) for b in ("x", "w", "y", "z"))
    f, g, q, r, d = (sol.block(b) for b in ("f", "g", "q", "r", "d"))
    I, J = y.shape
    usage = np.array([h.usage for h in inst.hospitals], dtype=float)
    out: list[FeasibilityViolation] = []
    flow_tol = tol * max(1.0, p.alpha * float(usage.sum()))

    def le(family: str, index: tuple, lhs: float, rhs: float, tolerance: float = tol) -> None:
        if lhs - rhs > tolerance:
            out.append(FeasibilityViolation(family, index, lhs - rhs))

    def eq(family: str, index: tuple, lhs: float, rhs: float) -> None:
        if abs(lhs - rhs) > flow_tol:
            out.append(FeasibilityViolation(family, index, lhs - rhs))

    for name in ("x", "w", "y", "z"):
        for idx, v in np.ndenumerate(sol.block(name)):
            if min(abs(v), abs(v - 1.0)) > tol:
                out.append(FeasibilityViolation(f"binary_{name}", idx, float(min(abs(v), abs(v - 1.0)))))
    for name in ("f", "g", "q", "r", "d"):
        for idx, v in np.ndenumerate(sol.block(name)):
            if v < -tol:
                out.append(FeasibilityViolation(f"nonnegative_{name}", idx, float(-v)))

    for i in range(I):
        for j in range(J):
            le("link_y", (i, j), y[i, j], x[j])
    for j in range(J):
        for k in range(J):
            le("link_z", (j, k), z[j, k], w[k])
    for i in range(I):
        le("assign_hospital", (i,), 1.0, math.fsum(y[i]))
    for j in range(J):
        le("assign_collection", (j,), x[j], math.fsum(z[j]))
    spent = math.fsum(s.fixed_cost_collection * x[j] for j, s in enumerate(inst.sites)) + math.fsum(
        s.fixed_cost_reprocessing * w[k] for k, s in enumerate(inst.sites)
    )
    le("budget", (), spent, p.budget)

    for i in range(I):
        eq("collect", (i,), math.fsum(f[i]), p.alpha * usage[i])
        for j in range(J):
            le("flow_f", (i, j), f[i, j], p.alpha * usage[i] * y[i, j], flow_tol)
    for j in range(J):
        eq("total_q", (j,), q[j], math.fsum(f[:, j]))
        eq("reprocess", (j,), math.fsum(g[j]), p.beta * q[j])
    big_m_g = p.beta * p.alpha * float(usage.sum())
    for j in range(J):
        for k in range(J):
            le("flow_g", (j, k), g[j, k], big_m_g * z[j, k], flow_tol)
    for k in range(J):
        eq("total_r", (k,), r[k], math.fsum(g[:, k]))
    eq("disposal", (), math.fsum(d), math.fsum(q) - math.fsum(r))
    return out


# --------------------------------------------------------------------------
# debug dump


def _fmt(v: float) -> str:
    return repr(float(v))


def write_lp(problem: MilpProblem) -> str:
    """Render the model in CPLEX LP text format (one constraint per line)."""
    names = problem.var_names or tuple(f"v{i + 1}" for i in range(problem.n_vars))
    row_names = problem.row_names or tuple(f"c{i + 1}" for i in range(problem.n_rows))

    def expr(coefs: dict[int, float]) -> str:
        if not coefs:
            return "0 " + names[0]
        parts = []
        for col, v in coefs.items():
            sign = "-" if v < 0 else "+"
            parts.append(f"{sign} {_fmt(abs(v))} {names[col]}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text

    lines = ["\\ generated by maskloop", "Maximize" if problem.maximize else "Minimize"]
    obj = {i: v for i, v in enumerate(problem.objective) if v != 0.0}
    lines.append(" obj: " + expr(obj))
    lines.append("Subject To")
    for name, (coefs, sense, rhs) in zip(row_names, problem.constraints):
        lines.append(f" {name}: {expr(coefs)} {sense.value} {_fmt(rhs)}")
    lines.append("Bounds")
    for i in range(problem.n_vars):
        if problem.integer[i]:
            continue
        lo, hi = problem.lower[i], problem.upper[i]
        hi_txt = "+inf" if math.isinf(hi) else _fmt(hi)
        lo_txt = "-inf" if math.isinf(lo) else _fmt(lo)
        lines.append(f" {lo_txt} <= {names[i]} <= {hi_txt}")
    bins = [names[i] for i in range(problem.n_vars) if problem.integer[i]]
    if bins:
        lines.append("Binaries")
        for start in range(0, len(bins), 8):
            lines.append(" " + " ".join(bins[start:start + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"

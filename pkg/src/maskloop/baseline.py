"""Take-make-dispose baseline and the circular-vs-linear comparison report."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Union

from .formulation import FeasibilityViolation, ObjectiveTriple, check_feasibility
from .geo import DistanceMatrix
from .instance import Instance
from .pareto import ParetoPoint

__all__ = [
    "LinearBaselineParams",
    "LinearResult",
    "Flows",
    "Deltas",
    "ComparisonReport",
    "InfeasiblePointError",
    "linear_profit",
    "linear_emissions",
    "compare",
]


class InfeasiblePointError(ValueError):
    def __init__(self, violations: list[FeasibilityViolation]):
        shown = "; ".join(str(v) for v in violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"circular point is infeasible: {shown}{more}")
        self.violations = violations


@dataclass(frozen=True)
class LinearBaselineParams:
    """Exogenous job range of the linear model."""

    jobs_low: int = 20
    jobs_high: int = 30

    def __post_init__(self) -> None:
        if self.jobs_low < 0 or self.jobs_low > self.jobs_high:
            raise ValueError("need 0 <= jobs_low <= jobs_high")


@dataclass(frozen=True)
class LinearResult:
    z1: float
    z2: float
    z3_low: int
    z3_high: int


@dataclass(frozen=True)
class Flows:
    collected: float
    reprocessed: float
    disposed: float


@dataclass(frozen=True)
class Deltas:
    """Circular minus linear; the job delta is a range against the linear job range."""

    z1: float
    z2: float
    z3_low: float
    z3_high: float


def _total_usage(inst: Instance) -> float:
    return math.fsum(h.usage for h in inst.hospitals)


def _require_disposal(inst: Instance) -> None:
    if not inst.disposal_sites:
        raise ValueError("the linear baseline needs at least one disposal site")


def linear_profit(inst: Instance) -> float:
    """Every used mask goes to the cheapest disposal site; no revenue."""
    _require_disposal(inst)
    cost = min(dm.unit_cost for dm in inst.disposal_sites)
    # + 0.0 turns -0.0 into 0.0 for zero usage
    return -(_total_usage(inst) * cost) + 0.0


def linear_emissions(inst: Instance) -> float:
    """Disposal footprint of every used mask at the lowest-emission site, as a negative advantage."""
    _require_disposal(inst)
    em = min(dm.unit_emission for dm in inst.disposal_sites)
    return -(_total_usage(inst) * em) + 0.0


_HEADERS = ("Model", "Economic (CAD)", "Environmental (kg CO2)", "Social (jobs)")


@dataclass(frozen=True)
class ComparisonReport:
    circular: ObjectiveTriple
    linear: LinearResult
    deltas: Deltas
    flows: Flows

    def __post_init__(self) -> None:
        if self.flows.collected - self.flows.reprocessed != self.flows.disposed:
            raise ValueError("flows violate collected = reprocessed + disposed")

    def table(self) -> str:
        """Two-row text table: circular and linear economy, one column per objective."""
        c, lin = self.circular, self.linear
        z3 = f"{c.z3:.0f}" if float(c.z3).is_integer() else f"{c.z3:.2f}"
        body = [
            _HEADERS,
            ("Circular Economy", f"{c.z1:.2f}", f"{c.z2:.2f}", z3),
            ("Linear Economy", f"{lin.z1:.2f}", f"{lin.z2:.2f}", f"{lin.z3_low}-{lin.z3_high}"),
        ]
        widths = [max(len(row[k]) for row in body) for k in range(4)]
        lines = []
        for row in body:
            cells = [row[0].ljust(widths[0])] + [row[k].rjust(widths[k]) for k in range(1, 4)]
            lines.append("  ".join(cells).rstrip())
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "circular": asdict(self.circular),
            "linear": asdict(self.linear),
            "deltas": asdict(self.deltas),
            "flows": asdict(self.flows),
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data: Union[str, bytes]) -> "ComparisonReport":
        doc = json.loads(data)
        return cls(
            circular=ObjectiveTriple(**doc["circular"]),
            linear=LinearResult(**doc["linear"]),
            deltas=Deltas(**doc["deltas"]),
            flows=Flows(**doc["flows"]),
        )


def compare(inst: Instance, distances: tuple[DistanceMatrix, DistanceMatrix], circular_point: ParetoPoint,
            lin: LinearBaselineParams = LinearBaselineParams(), tol: float = 1e-6) -> ComparisonReport:
    """Put a circular solution next to the linear baseline.

    The point is audited with ``check_feasibility`` first; the disposed flow is
    reported as collected minus reprocessed so the balance holds exactly.
    """
    violations = check_feasibility(inst, distances[0], distances[1], circular_point.solution, tol=tol)
    if violations:
        raise InfeasiblePointError(violations)
    sol = circular_point.solution
    collected, reprocessed = sol.collected, sol.reprocessed
    flows = Flows(collected, reprocessed, collected - reprocessed)
    linear = LinearResult(linear_profit(inst), linear_emissions(inst), lin.jobs_low, lin.jobs_high)
    c = circular_point.triple
    deltas = Deltas(c.z1 - linear.z1, c.z2 - linear.z2, c.z3 - lin.jobs_high, c.z3 - lin.jobs_low)
    return ComparisonReport(c, linear, deltas, flows)

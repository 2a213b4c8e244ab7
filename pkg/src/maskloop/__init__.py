"""Design of a circular collection-and-reprocessing network for single-use masks.

The package builds a tri-objective MILP (profit, net CO2 advantage, jobs) over
hospitals, candidate sites and disposal sites, solves it with a built-in
simplex/branch-and-bound engine, traces trade-offs with the epsilon-constraint
method and compares the result with a dispose-only baseline.
"""
from importlib import resources

from .baseline import ComparisonReport, LinearBaselineParams, compare, linear_emissions, linear_profit
from .formulation import (
    MilpProblem,
    Objective,
    ObjectiveTriple,
    Solution,
    VariableLayout,
    build_circular_model,
    check_feasibility,
    evaluate_solution,
    write_lp,
)
from .geo import DistanceMatrix, distance_matrix, haversine_km, instance_distances
from .instance import Instance, RangeConfig, generate_synthetic, load_instance, loads_instance, save_instance, validate
from .pareto import ParetoPoint, PayoffTable, epsilon_sweep, export_front, filter_nondominated, load_front, payoff_table
from .solver import SolveOptions, enumerate_oracle, solve_lp, solve_milp

__version__ = "0.1.0"

SAMPLE_INSTANCE = "sample_25x25.json"


def sample_instance() -> Instance:
    """The bundled 25-hospital, 25-site instance."""
    data = resources.files(__package__).joinpath("data", SAMPLE_INSTANCE).read_bytes()
    return loads_instance(data)


__all__ = [
    "ComparisonReport", "LinearBaselineParams", "compare", "linear_emissions", "linear_profit",
    "MilpProblem", "Objective", "ObjectiveTriple", "Solution", "VariableLayout",
    "build_circular_model", "check_feasibility", "evaluate_solution", "write_lp",
    "DistanceMatrix", "distance_matrix", "haversine_km", "instance_distances",
    "Instance", "RangeConfig", "generate_synthetic", "load_instance", "loads_instance", "save_instance", "validate",
    "ParetoPoint", "PayoffTable", "epsilon_sweep", "export_front", "filter_nondominated", "load_front",
    "payoff_table", "SolveOptions", "enumerate_oracle", "solve_lp", "solve_milp", "sample_instance",
]

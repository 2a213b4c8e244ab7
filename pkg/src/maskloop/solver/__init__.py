"""Exact desk-scale MILP solving: simplex, branch-and-bound, enumeration oracle."""
from .bnb import MilpResult, MilpStatus, SolveOptions, UnboundedRelaxation, solve_milp
from .oracle import MAX_ORACLE_BINARIES, TooManyBinaries, enumerate_oracle
from .simplex import LpEngine, LpResult, LpStatus, NumericalError, solve_lp

__all__ = [
    "LpEngine", "LpResult", "LpStatus", "NumericalError", "solve_lp",
    "MilpResult", "MilpStatus", "SolveOptions", "UnboundedRelaxation", "solve_milp",
    "MAX_ORACLE_BINARIES", "TooManyBinaries", "enumerate_oracle",
]

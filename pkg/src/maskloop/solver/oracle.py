"""Exhaustive-enumeration reference solver for small MILPs.

Every assignment of the binary columns is tried; the continuous remainder is
solved as an LP.  Rows that involve only binaries are checked up front in
vectorized batches, which discards most assignments without an LP solve.
"""
from __future__ import annotations

import math

import numpy as np

from ..formulation import MilpProblem, Sense
from .bnb import MilpResult, MilpStatus, UnboundedRelaxation
from .simplex import LpEngine, LpStatus

__all__ = ["MAX_ORACLE_BINARIES", "TooManyBinaries", "enumerate_oracle"]

MAX_ORACLE_BINARIES = 22
_BATCH = 1 << 14
_ROW_TOL = 1e-9


class TooManyBinaries(ValueError):
    pass


def _binary_only_rows(problem: MilpProblem, binaries: np.ndarray):
    A = problem.A.tocsr()
    continuous = ~problem.integer
    touches = np.asarray(abs(A[:, continuous]).sum(axis=1)).ravel() > 0 if continuous.any() \
        else np.zeros(A.shape[0], dtype=bool)
    rows = np.flatnonzero(~touches)
    dense = A[rows][:, binaries].toarray()
    senses = np.array([problem.senses[i].value for i in rows], dtype=object)
    return dense, senses, problem.rhs[rows]


def _assignments(k: int, start: int, stop: int) -> np.ndarray:
    # column 0 is the most significant bit, so batches come out in lexicographic order
    codes = np.arange(start, stop, dtype=np.int64)[:, None]
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((codes >> shifts) & 1).astype(float)


def enumerate_oracle(problem: MilpProblem) -> MilpResult:
    """Exact optimum by brute force over at most ``MAX_ORACLE_BINARIES`` binaries.

    Ties between equally good assignments go to the first in lexicographic
    order of the binary columns.  ``nodes_explored`` counts the residual LPs.
    """
    binaries = np.flatnonzero(problem.integer)
    k = len(binaries)
    if k > MAX_ORACLE_BINARIES:
        raise TooManyBinaries(f"{k} binaries exceed the oracle cap of {MAX_ORACLE_BINARIES}")
    engine = LpEngine(problem)
    sgn = 1.0 if problem.maximize else -1.0
    Ab, senses, rb = _binary_only_rows(problem, binaries)
    le, ge, eq = senses == Sense.LE.value, senses == Sense.GE.value, senses == Sense.EQ.value
    tol = _ROW_TOL * np.maximum(1.0, np.abs(rb))

    best_vals = None
    best_obj = -math.inf * sgn
    solved = 0
    iters = 0
    for start in range(0, 1 << k, _BATCH):
        combos = _assignments(k, start, min(1 << k, start + _BATCH))
        # binaries must also respect their own bounds
        ok = np.all((combos >= problem.lower[binaries]) & (combos <= problem.upper[binaries]), axis=1)
        if len(rb):
            lhs = combos @ Ab.T
            ok &= np.all(~le | (lhs <= rb + tol), axis=1)
            ok &= np.all(~ge | (lhs >= rb - tol), axis=1)
            ok &= np.all(~eq | (np.abs(lhs - rb) <= tol), axis=1)
        for assignment in combos[ok]:
            lower = problem.lower.copy()
            upper = problem.upper.copy()
            lower[binaries] = upper[binaries] = assignment
            res = engine.solve(lower, upper)
            solved += 1
            iters += res.iterations
            if res.status is LpStatus.UNBOUNDED:
                raise UnboundedRelaxation("a residual LP is unbounded")
            if res.status is LpStatus.OPTIMAL and sgn * (res.objective - best_obj) > 0:
                best_vals, best_obj = res.values, res.objective

    if best_vals is None:
        return MilpResult(MilpStatus.INFEASIBLE, None, math.nan, math.nan, solved, iters)
    return MilpResult(MilpStatus.OPTIMAL, best_vals, best_obj, best_obj, solved, iters, [best_obj])

"""Two-phase primal simplex for bounded LPs.

Every row ``a @ x (sense) b`` gets a logical column ``e_i`` so the system
becomes ``A x + s = b`` with bounds on ``s`` encoding the sense.  Rows whose
logical cannot absorb the starting residual receive an artificial column;
phase 1 drives the artificials to zero, phase 2 optimizes the real objective
with the artificials pinned at zero.

The basis is kept as a sparse LU factorization (SuperLU) plus a product-form
eta file, refactorized every ``REFACTOR_EVERY`` pivots.  Pricing is devex
(approximate steepest edge) with a two-pass ratio test under a slowly
expanding feasibility tolerance.  Every pivot takes a small positive step, so
degenerate vertices cannot make the method cycle; the tolerance is reset
periodically by moving nonbasic variables back onto their bounds.  All
tie-breaks are by lowest index so runs are reproducible.  The pivoting loop itself lives in ``_kernels``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ..formulation import MilpProblem, Sense
from . import _kernels as _k

__all__ = ["LpStatus", "LpResult", "NumericalError", "LpEngine", "solve_lp"]

REFACTOR_EVERY = 64
FEAS_TOL = 1e-9


class NumericalError(RuntimeError):
    """The simplex lost numerical control (singular basis, drift, stalls)."""


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    values: Optional[np.ndarray]
    objective: float
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _pow2(v: np.ndarray) -> np.ndarray:
    # powers of two keep scaling exact in binary floating point
    return np.exp2(np.round(np.log2(v)))


def _scale_factors(A: sp.csr_matrix, passes: int = 4) -> tuple[np.ndarray, np.ndarray]:
    m, n = A.shape
    row = np.ones(m)
    col = np.ones(n)
    if A.nnz == 0:
        return row, col
    absA = abs(A).tocsr()
    for _ in range(passes):
        S = sp.diags(row) @ absA @ sp.diags(col)
        S = S.tocsr()
        rmax = S.max(axis=1).toarray().ravel()
        rmin = np.array([S.data[S.indptr[i]:S.indptr[i + 1]].min() if S.indptr[i + 1] > S.indptr[i] else 1.0
                         for i in range(m)])
        rmax[rmax == 0] = 1.0
        row = row / np.sqrt(rmax * rmin)
        S = (sp.diags(row) @ absA @ sp.diags(col)).tocsc()
        cmax = S.max(axis=0).toarray().ravel()
        cmin = np.array([S.data[S.indptr[j]:S.indptr[j + 1]].min() if S.indptr[j + 1] > S.indptr[j] else 1.0
                         for j in range(n)])
        cmax[cmax == 0] = 1.0
        col = col / np.sqrt(cmax * cmin)
    # final pass: largest entry of every row is about 1
    S = (sp.diags(row) @ absA @ sp.diags(col)).tocsr()
    rmax = S.max(axis=1).toarray().ravel()
    rmax[rmax == 0] = 1.0
    row = row / rmax
    return _pow2(row), _pow2(col)


class _Basis:
    """SuperLU factors of the basis matrix plus an eta file, as flat arrays."""

    def __init__(self, Kp: np.ndarray, Ki: np.ndarray, Kx: np.ndarray, heads: np.ndarray, capacity: int):
        m = len(heads)
        self.m = m
        starts, lens = Kp[heads], Kp[heads + 1] - Kp[heads]
        ident = np.arange(m, dtype=np.int64)
        if np.all(lens == 1) and np.all(Ki[starts] == ident):
            # diagonal basis (all logicals or artificials): no factorization needed
            diag = Kx[starts].astype(float)
            if np.any(diag == 0):
                raise NumericalError("singular basis")
            unit = np.arange(m + 1, dtype=np.int64)
            self.factors = (unit, ident, np.ones(m), ident, unit, ident, diag, ident, ident, ident)
        else:
            offsets = np.concatenate([[0], np.cumsum(lens)])
            take = np.repeat(starts - offsets[:-1], lens) + np.arange(offsets[-1])
            B = sp.csc_matrix((Kx[take], Ki[take], offsets), shape=(m, m))
            try:
                lu = splu(B, permc_spec="COLAMD", options={"SymmetricMode": False})
            except RuntimeError as exc:
                raise NumericalError(f"singular basis: {exc}") from None
            L, U = lu.L.tocsc(), lu.U.tocsc()
            udiag = U.diagonal()
            if not np.all(np.isfinite(udiag)) or np.any(udiag == 0):
                raise NumericalError("singular basis")
            self.factors = (
                *_csc_arrays(L), _diag_index(L),
                *_csc_arrays(U), _diag_index(U),
                lu.perm_r.astype(np.int64), lu.perm_c.astype(np.int64),
            )
        self.eta_r = np.zeros(capacity, dtype=np.int64)
        self.eta_piv = np.zeros(capacity)
        self.eta_ptr = np.zeros(capacity + 1, dtype=np.int64)
        self.eta_idx = np.zeros(capacity * m, dtype=np.int64)
        self.eta_val = np.zeros(capacity * m)
        self.n_eta = 0

    @property
    def eta_arrays(self):
        return self.eta_r, self.eta_piv, self.eta_ptr, self.eta_idx, self.eta_val

    def ftran(self, a: np.ndarray) -> np.ndarray:
        v = _k.lu_solve(*self.factors, np.ascontiguousarray(a, dtype=float))
        _k.apply_etas(v, self.n_eta, *self.eta_arrays)
        return v

    def btran(self, c: np.ndarray) -> np.ndarray:
        v = np.array(c, dtype=float)
        _k.apply_etas_t(v, self.n_eta, *self.eta_arrays)
        return _k.lu_solve_t(*self.factors, v)


def _csc_arrays(M: sp.csc_matrix):
    M.sort_indices()
    return M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data.astype(float)


def _diag_index(M: sp.csc_matrix) -> np.ndarray:
    n = M.shape[0]
    cols = np.repeat(np.arange(n), np.diff(M.indptr))
    hit = np.flatnonzero(M.indices == cols)
    out = np.full(n, -1, dtype=np.int64)
    out[cols[hit]] = hit
    if np.any(out < 0):
        raise NumericalError("singular basis: structurally zero pivot")
    return out


class LpEngine:
    """Scaled standard form of a :class:`MilpProblem`, reusable across bound changes.

    ``solve(lower, upper)`` runs a fresh two-phase simplex for the given
    structural bounds; the constraint matrix, scaling and objective are shared.
    """

    def __init__(self, problem: MilpProblem):
        self.problem = problem
        A = problem.A.tocsr()
        m, n = A.shape
        self.m, self.n = m, n
        self.row_scale, self.col_scale = _scale_factors(A)
        As = (sp.diags(self.row_scale) @ A @ sp.diags(self.col_scale)).tocsc()
        As.sort_indices()
        self._csc = (As.indptr.astype(np.int64), As.indices.astype(np.int64), As.data.astype(float))
        self.b = problem.rhs * self.row_scale
        sign = -1.0 if problem.maximize else 1.0
        # internal problem is a minimization in scaled variables
        self.c = sign * problem.objective * self.col_scale
        slo = np.empty(m)
        shi = np.empty(m)
        for i, s in enumerate(problem.senses):
            if s is Sense.LE:
                slo[i], shi[i] = 0.0, np.inf
            elif s is Sense.GE:
                slo[i], shi[i] = -np.inf, 0.0
            else:
                slo[i], shi[i] = 0.0, 0.0
        self.slack_lo, self.slack_hi = slo, shi

    # ------------------------------------------------------------------
    def solve(self, lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None,
              max_iter: Optional[int] = None) -> LpResult:
        p = self.problem
        lower = p.lower if lower is None else np.asarray(lower, dtype=float)
        upper = p.upper if upper is None else np.asarray(upper, dtype=float)
        if np.any(lower > upper):
            return LpResult(LpStatus.INFEASIBLE, None, math.nan)
        m, n = self.m, self.n
        lo_x = lower / self.col_scale
        hi_x = upper / self.col_scale

        # starting point: structurals at a finite bound (0 if free)
        xN = np.where(np.isfinite(lo_x), lo_x, np.where(np.isfinite(hi_x), hi_x, 0.0))
        resid = self.b - _k.csc_matvec(*self._csc, xN, m)
        slack_val = np.clip(resid, self.slack_lo, self.slack_hi)
        gap = resid - slack_val
        art_rows = np.flatnonzero(np.abs(gap) > FEAS_TOL * np.maximum(1.0, np.abs(self.b)))
        n_art = len(art_rows)
        art_sign = np.sign(gap[art_rows])
        # rows without an artificial start with their logical basic at the residual
        no_art = np.ones(m, dtype=bool)
        no_art[art_rows] = False
        slack_val[no_art] = resid[no_art]

        # column layout: [structural | logical | artificial]
        N = n + m + n_art
        lo = np.concatenate([lo_x, self.slack_lo, np.zeros(n_art)])
        hi = np.concatenate([hi_x, self.slack_hi, np.full(n_art, np.inf)])
        Ap, Ai, Ax = self._csc
        nnz = Ap[-1]
        K = (
            np.concatenate([Ap, nnz + 1 + np.arange(m + n_art, dtype=np.int64)]),
            np.concatenate([Ai, np.arange(m, dtype=np.int64), art_rows.astype(np.int64)]),
            np.concatenate([Ax, np.ones(m), art_sign]),
        )
        x = np.concatenate([xN, slack_val, np.abs(gap[art_rows])])
        # an artificial row's logical stays nonbasic at the bound it was clipped to
        heads = np.arange(n, n + m)
        heads[art_rows] = n + m + np.arange(n_art)

        run = _Run(K, self.b, lo, hi, x, heads, max_iter or 50 * (m + N) + 1000)
        if n_art:
            c1 = np.zeros(N)
            c1[n + m:] = 1.0
            run.optimize(c1)
            infeas = float(np.sum(run.x[n + m:]))
            if infeas > 1e-7 * max(1.0, float(np.max(np.abs(self.b), initial=0.0))):
                return LpResult(LpStatus.INFEASIBLE, None, math.nan, run.iterations)
            run.hi[n + m:] = 0.0
            art = run.x[n + m:]
            moved = float(np.max(np.abs(art[run.pos[n + m:] < 0]), initial=0.0))
            art[:] = 0.0
            if moved > 1e-12:
                run._recompute_basics()
        c2 = np.concatenate([self.c, np.zeros(m + n_art)])
        status = run.optimize(c2)
        if status is LpStatus.UNBOUNDED:
            return LpResult(LpStatus.UNBOUNDED, None, math.inf if p.maximize else -math.inf, run.iterations)

        values = run.x[:n] * self.col_scale
        # snap onto bounds that the iterate sits within round-off of
        for bound in (lower, upper):
            near = np.isfinite(bound) & (np.abs(values - bound) <= 1e-9 * np.maximum(1.0, np.abs(bound)))
            values = np.where(near, bound, values)
        return LpResult(LpStatus.OPTIMAL, values, p.objective_value(values), run.iterations)


class _Run:
    """Mutable state of one simplex run over a fixed column set."""

    def __init__(self, K, b, lo, hi, x, heads, max_iter):
        self.Kp, self.Ki, self.Kx = K
        self.b = b
        self.lo, self.hi, self.x = lo, hi, x
        self.heads = heads.astype(np.int64)
        self.pos = np.full(len(x), -1, dtype=np.int64)
        self.pos[self.heads] = np.arange(len(self.heads))
        self.m = len(b)
        self.iterations = 0
        self.max_iter = max_iter
        self.basis = _Basis(self.Kp, self.Ki, self.Kx, self.heads, REFACTOR_EVERY)

    def _snap_nonbasic(self) -> bool:
        """Clip nonbasic values onto their bounds; report whether the basics need recomputing."""
        nb = self.pos < 0
        snapped = np.clip(self.x[nb], self.lo[nb], self.hi[nb])
        moved = float(np.max(np.abs(snapped - self.x[nb]), initial=0.0))
        self.x[nb] = snapped
        return moved > 1e-12

    def _refactor(self) -> None:
        self.basis = _Basis(self.Kp, self.Ki, self.Kx, self.heads, REFACTOR_EVERY)
        self._recompute_basics()

    def _recompute_basics(self) -> None:
        """Recompute basic values from the nonbasic ones, shedding drift."""
        xN = np.where(self.pos >= 0, 0.0, self.x)
        xb = self.basis.ftran(self.b - _k.csc_matvec(self.Kp, self.Ki, self.Kx, xN, self.m))
        drift = np.max(np.abs(xb - self.x[self.heads]), initial=0.0)
        if not np.all(np.isfinite(xb)) or drift > 1e-4 * max(1.0, np.max(np.abs(xb), initial=0.0)):
            raise NumericalError(f"basic solution drifted by {drift:.3g} between refactorizations")
        self.x[self.heads] = xb

    def optimize(self, cost: np.ndarray) -> LpStatus:
        fixed = self.lo == self.hi
        # devex reference weights, reset at the start of every phase
        weights = np.ones(len(self.x))
        counters = np.array([self.iterations, self.max_iter, self.basis.n_eta], dtype=np.int64)
        expand = np.array([_k.EXPAND_START])
        while True:
            counters[2] = self.basis.n_eta
            code = _k.iterate(self.Kp, self.Ki, self.Kx, self.lo, self.hi, self.x, self.heads, self.pos,
                              cost, weights, fixed, *self.basis.factors, *self.basis.eta_arrays,
                              counters, expand, REFACTOR_EVERY)
            self.basis.n_eta = int(counters[2])
            self.iterations = int(counters[0])
            if code == _k.OPTIMAL:
                if self._snap_nonbasic():
                    self._recompute_basics()
                return LpStatus.OPTIMAL
            if code == _k.UNBOUNDED:
                return LpStatus.UNBOUNDED
            if code == _k.ITER_LIMIT:
                raise NumericalError(f"simplex iteration limit ({self.max_iter}) reached")
            if code == _k.BAD_PIVOT:
                if self.basis.n_eta == 0:
                    raise NumericalError("pivot element vanished")
            if code == _k.RESET:
                expand[0] = _k.EXPAND_START
                if self._snap_nonbasic():
                    self._recompute_basics()
                continue
            # refactorize, also as the first remedy for a tiny pivot
            self._refactor()


def solve_lp(problem: MilpProblem, lower: Optional[np.ndarray] = None,
             upper: Optional[np.ndarray] = None) -> LpResult:
    """Solve the LP relaxation of ``problem`` (integrality ignored)."""
    return LpEngine(problem).solve(lower, upper)

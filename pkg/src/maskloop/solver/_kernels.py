"""Compiled inner loops of the revised simplex.

The basis inverse is represented as ``Pr B Pc = L U`` (SuperLU's convention)
followed by a product-form eta file.  All routines work on CSC arrays and
plain numpy buffers so they can be compiled by numba.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# return codes of ``iterate``
OPTIMAL = 0
UNBOUNDED = 1
REFACTOR = 2
ITER_LIMIT = 3
BAD_PIVOT = 4
RESET = 5

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
# expanding feasibility tolerance: starts at EXPAND_START, grows by
# EXPAND_STEP per pivot and is reset once it reaches EXPAND_MAX
EXPAND_START = 1e-9
EXPAND_MAX = 1e-8
EXPAND_STEP = (EXPAND_MAX - EXPAND_START) / 10000
DROP_TOL = 1e-14


@njit(cache=True)
def csc_matvec(Kp, Ki, Kx, v, m):
    out = np.zeros(m)
    for j in range(Kp.shape[0] - 1):
        vj = v[j]
        if vj != 0.0:
            for p in range(Kp[j], Kp[j + 1]):
                out[Ki[p]] += Kx[p] * vj
    return out


@njit(cache=True)
def lu_solve(Lp, Li, Lx, Ldiag, Up, Ui, Ux, Udiag, perm_r, perm_c, b):
    """Solve ``B x = b``."""
    m = b.shape[0]
    y = np.empty(m)
    for i in range(m):
        y[perm_r[i]] = b[i]
    for j in range(m):
        yj = y[j] / Lx[Ldiag[j]]
        y[j] = yj
        if yj != 0.0:
            for p in range(Lp[j], Lp[j + 1]):
                i = Li[p]
                if i > j:
                    y[i] -= Lx[p] * yj
    for j in range(m - 1, -1, -1):
        zj = y[j] / Ux[Udiag[j]]
        y[j] = zj
        if zj != 0.0:
            for p in range(Up[j], Up[j + 1]):
                i = Ui[p]
                if i < j:
                    y[i] -= Ux[p] * zj
    x = np.empty(m)
    for i in range(m):
        x[i] = y[perm_c[i]]
    return x


@njit(cache=True)
def lu_solve_t(Lp, Li, Lx, Ldiag, Up, Ui, Ux, Udiag, perm_r, perm_c, c):
    """Solve ``B^T u = c``."""
    m = c.shape[0]
    w = np.empty(m)
    for i in range(m):
        w[perm_c[i]] = c[i]
    for j in range(m):
        s = w[j]
        for p in range(Up[j], Up[j + 1]):
            i = Ui[p]
            if i < j:
                s -= Ux[p] * w[i]
        w[j] = s / Ux[Udiag[j]]
    for j in range(m - 1, -1, -1):
        s = w[j]
        for p in range(Lp[j], Lp[j + 1]):
            i = Li[p]
            if i > j:
                s -= Lx[p] * w[i]
        w[j] = s / Lx[Ldiag[j]]
    u = np.empty(m)
    for i in range(m):
        u[i] = w[perm_r[i]]
    return u


@njit(cache=True)
def apply_etas(v, n_eta, eta_r, eta_piv, eta_ptr, eta_idx, eta_val):
    for k in range(n_eta):
        r = eta_r[k]
        vr = v[r] / eta_piv[k]
        if vr != 0.0:
            for p in range(eta_ptr[k], eta_ptr[k + 1]):
                v[eta_idx[p]] -= eta_val[p] * vr
        v[r] = vr


@njit(cache=True)
def apply_etas_t(v, n_eta, eta_r, eta_piv, eta_ptr, eta_idx, eta_val):
    for k in range(n_eta - 1, -1, -1):
        r = eta_r[k]
        s = 0.0
        for p in range(eta_ptr[k], eta_ptr[k + 1]):
            i = eta_idx[p]
            if i != r:
                s += eta_val[p] * v[i]
        v[r] = (v[r] - s) / eta_piv[k]



@njit(cache=True)
def iterate(Kp, Ki, Kx, lo, hi, x, heads, pos, cost, weights, fixed,
            Lp, Li, Lx, Ldiag, Up, Ui, Ux, Udiag, perm_r, perm_c,
            eta_r, eta_piv, eta_ptr, eta_idx, eta_val, counters, expand,
            refactor_every):
    """Run primal simplex pivots until optimality, a refactorization or a reset is due.

    ``counters`` holds [iterations, max_iter, n_eta]; ``expand[0]`` is the
    working feasibility tolerance, which grows by ``EXPAND_STEP`` per pivot.
    Each pivot moves at least ``EXPAND_STEP / |alpha_r|``, so the objective
    strictly improves and degenerate cycles cannot form.
    """
    m = heads.shape[0]
    N = x.shape[0]
    d = np.empty(N)
    cb = np.empty(m)
    col = np.zeros(m)
    while True:
        if counters[0] >= counters[1]:
            return ITER_LIMIT
        n_eta = counters[2]
        if n_eta >= refactor_every:
            return REFACTOR
        if expand[0] >= EXPAND_MAX:
            return RESET
        delta = expand[0]

        # duals and reduced costs
        for i in range(m):
            cb[i] = cost[heads[i]]
        apply_etas_t(cb, n_eta, eta_r, eta_piv, eta_ptr, eta_idx, eta_val)
        y = lu_solve_t(Lp, Li, Lx, Ldiag, Up, Ui, Ux, Udiag, perm_r, perm_c, cb)

        # devex pricing
        q = -1
        best = 0.0
        for j in range(N):
            if pos[j] >= 0 or fixed[j]:
                continue
            dj = cost[j]
            for p in range(Kp[j], Kp[j + 1]):
                dj -= Kx[p] * y[Ki[p]]
            d[j] = dj
            if (dj < -OPT_TOL and x[j] < hi[j]) or (dj > OPT_TOL and x[j] > lo[j]):
                score = dj * dj / weights[j]
                if score > best:
                    best = score
                    q = j
        if q < 0:
            return OPTIMAL
        direction = 1.0 if d[q] < 0 else -1.0

        # entering column through the basis
        for i in range(m):
            col[i] = 0.0
        for p in range(Kp[q], Kp[q + 1]):
            col[Ki[p]] = Kx[p]
        alpha = lu_solve(Lp, Li, Lx, Ldiag, Up, Ui, Ux, Udiag, perm_r, perm_c, col)
        apply_etas(alpha, n_eta, eta_r, eta_piv, eta_ptr, eta_idx, eta_val)

        # ratio test, pass one: longest step keeping basics within delta of their bounds
        theta_max = np.inf
        amax = 0.0
        for i in range(m):
            if abs(alpha[i]) > amax:
                amax = abs(alpha[i])
            da = direction * alpha[i]
            h = heads[i]
            if da > PIVOT_TOL:
                t = (x[h] - lo[h] + delta) / da
            elif da < -PIVOT_TOL:
                t = (hi[h] - x[h] + delta) / -da
            else:
                continue
            if t < theta_max:
                theta_max = t
        theta_flip = hi[q] - x[q] if direction > 0 else x[q] - lo[q]
        if theta_max == np.inf and theta_flip == np.inf:
            return UNBOUNDED

        counters[0] += 1
        expand[0] = delta + EXPAND_STEP
        if theta_flip <= theta_max:
            # bound flip: the entering variable crosses to its other bound
            for i in range(m):
                if alpha[i] != 0.0:
                    x[heads[i]] -= theta_flip * direction * alpha[i]
            x[q] = hi[q] if direction > 0 else lo[q]
            continue

        # pass two: largest pivot among rows blocking within theta_max
        r = -1
        rbest = 0.0
        theta = 0.0
        for i in range(m):
            da = direction * alpha[i]
            h = heads[i]
            if da > PIVOT_TOL:
                t = (x[h] - lo[h]) / da
            elif da < -PIVOT_TOL:
                t = (hi[h] - x[h]) / -da
            else:
                continue
            if t <= theta_max and abs(da) > rbest:
                rbest = abs(da)
                r = i
                theta = t
        if r < 0 or rbest < PIVOT_TOL * max(1.0, amax):
            return BAD_PIVOT
        theta = max(theta, EXPAND_STEP / rbest)
        leaving = heads[r]

        # devex reference weights from the pivot row
        for i in range(m):
            cb[i] = 0.0
        cb[r] = 1.0
        apply_etas_t(cb, n_eta, eta_r, eta_piv, eta_ptr, eta_idx, eta_val)
        rho = lu_solve_t(Lp, Li, Lx, Ldiag, Up, Ui, Ux, Udiag, perm_r, perm_c, cb)
        wq = weights[q]
        ar = alpha[r]
        wmax = 0.0
        for j in range(N):
            if pos[j] >= 0 or fixed[j]:
                continue
            rj = 0.0
            for p in range(Kp[j], Kp[j + 1]):
                rj += Kx[p] * rho[Ki[p]]
            if rj != 0.0:
                cand = (rj / ar) ** 2 * wq
                if cand > weights[j]:
                    weights[j] = cand
            if weights[j] > wmax:
                wmax = weights[j]
        weights[leaving] = max(wq / (ar * ar), 1.0)
        if wmax > 1e8:
            for j in range(N):
                weights[j] = 1.0

        # the leaving variable keeps its value, at most delta outside its bound
        for i in range(m):
            if alpha[i] != 0.0:
                x[heads[i]] -= theta * direction * alpha[i]
        x[q] += direction * theta
        pos[leaving] = -1
        pos[q] = r
        heads[r] = q

        # append the eta column (sparse copy of alpha)
        start = eta_ptr[n_eta]
        k = start
        for i in range(m):
            a = alpha[i]
            if abs(a) > DROP_TOL or i == r:
                eta_idx[k] = i
                eta_val[k] = a
                k += 1
        eta_r[n_eta] = r
        eta_piv[n_eta] = alpha[r]
        eta_ptr[n_eta + 1] = k
        counters[2] = n_eta + 1

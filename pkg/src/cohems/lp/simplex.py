"""Dense two-phase tableau simplex.

Entering variables follow Dantzig's rule until a run of degenerate
pivots is seen, after which Bland's rule is used for the rest of the
phase. Ratio-test ties always go to the smallest basic index, so a
given instance is solved identically every time.
"""

from __future__ import annotations

import numpy as np

from .instance import FEAS_TOL, OPT_TOL, LpInstance, LpSolution, LpStatus

PIVOT_TOL = 1e-11
DEGENERATE_RUN = 30


class _Tableau:
    def __init__(self, T, basis, max_iter):
        self.T = T
        self.basis = basis
        self.max_iter = max_iter
        self.iterations = 0

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j

    def run(self, allowed):
        """Minimise the objective in the last row over columns ``allowed``."""
        T = self.T
        m = T.shape[0] - 1
        bland = False
        degenerate = 0
        scale = 1.0 + np.max(np.abs(T[-1, :-1]), initial=0.0)
        while True:
            if self.iterations >= self.max_iter:
                return LpStatus.ITERATION_LIMIT
            red = T[-1, :-1]
            cand = np.flatnonzero((red < -OPT_TOL * scale) & allowed)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            j = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            col = T[:m, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if rows.size == 0:
                return LpStatus.UNBOUNDED
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(tied[np.argmin(np.asarray(self.basis)[tied])])
            if best <= 1e-12:
                degenerate += 1
                if degenerate >= DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
            self.pivot(r, j)
            self.iterations += 1


def _standard_form(inst: LpInstance):
    """Rewrite ``inst`` as ``min c'p, A p = b, p >= 0``.

    Returns the pieces together with the affine map ``x = x0 + Tm p``.
    """
    n = inst.n_vars
    lb, ub = inst.lb, inst.ub
    cols, x0 = [], np.zeros(n)
    tmap = []  # (original index, sign) per standard column
    bound_rows = []
    for j in range(n):
        if np.isfinite(lb[j]):
            x0[j] = lb[j]
            tmap.append((j, 1.0))
            if np.isfinite(ub[j]):
                if ub[j] < lb[j]:
                    return None
                bound_rows.append((len(tmap) - 1, ub[j] - lb[j]))
        elif np.isfinite(ub[j]):
            x0[j] = ub[j]
            tmap.append((j, -1.0))
        else:
            tmap.append((j, 1.0))
            tmap.append((j, -1.0))
    k = len(tmap)
    Tm = np.zeros((n, k))
    for col, (j, s) in enumerate(tmap):
        Tm[j, col] = s

    A_ub = inst.A_ub.toarray()
    A_eq = inst.A_eq.toarray()
    m_ub, m_eq, m_b = A_ub.shape[0], A_eq.shape[0], len(bound_rows)
    m = m_ub + m_b + m_eq
    n_slack = m_ub + m_b
    A = np.zeros((m, k + n_slack))
    b = np.zeros(m)
    A[:m_ub, :k] = A_ub @ Tm
    b[:m_ub] = inst.b_ub - A_ub @ x0
    for r, (col, width) in enumerate(bound_rows):
        A[m_ub + r, col] = 1.0
        b[m_ub + r] = width
    A[m_ub + m_b:, :k] = A_eq @ Tm
    b[m_ub + m_b:] = inst.b_eq - A_eq @ x0
    A[:n_slack, k:] = np.eye(n_slack)
    c = np.zeros(k + n_slack)
    c[:k] = inst.c @ Tm
    const = float(inst.c @ x0) + inst.constant
    return A, b, c, const, x0, Tm, (m_ub, m_b, m_eq)


def simplex_solve(inst: LpInstance, max_iter: int | None = None) -> LpSolution:
    std = _standard_form(inst)
    if std is None:
        return LpSolution(LpStatus.INFEASIBLE, method="simplex")
    A, b, c, const, x0, Tm, (m_ub, m_b, m_eq) = std
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 100

    sign = np.where(b < 0, -1.0, 1.0)
    As = A * sign[:, None]
    bs = b * sign

    # initial basis: slack columns that stayed +1 after sign flips, artificials elsewhere
    basis = [-1] * m
    for r in range(m):
        if r < m_ub + m_b and sign[r] > 0:
            basis[r] = n - (m_ub + m_b) + r
    need = [r for r in range(m) if basis[r] < 0]
    n_art = len(need)
    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = As
    T[:m, -1] = bs
    for a, r in enumerate(need):
        T[r, n + a] = 1.0
        basis[r] = n + a
    tab = _Tableau(T, basis, max_iter)

    if n_art:
        T[-1, n:n + n_art] = 1.0
        for r in need:
            T[-1] -= T[r]
        status = tab.run(np.ones(n + n_art, dtype=bool))
        if status is LpStatus.ITERATION_LIMIT:
            return LpSolution(status, iterations=tab.iterations, method="simplex")
        scale = 1.0 + np.max(np.abs(bs), initial=0.0)
        if -T[-1, -1] > FEAS_TOL * scale:
            return LpSolution(LpStatus.INFEASIBLE, iterations=tab.iterations, method="simplex")
        # drive artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if tab.basis[r] >= n:
                nz = np.flatnonzero(np.abs(T[r, :n]) > 1e-9)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                    keep.append(r)
            else:
                keep.append(r)
        rows = keep + [m]
        T = np.ascontiguousarray(np.delete(T[rows], np.s_[n:n + n_art], axis=1))
        tab.T = T
        tab.basis = [tab.basis[r] for r in keep]
    else:
        keep = list(range(m))

    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, j in enumerate(tab.basis):
        T[-1] -= c[j] * T[r]
    status = tab.run(np.ones(n, dtype=bool))
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, iterations=tab.iterations, method="simplex")

    p = np.zeros(n)
    for r, j in enumerate(tab.basis):
        p[j] = T[r, -1]
    x = x0 + Tm @ p[:Tm.shape[1]]

    # duals from the optimal basis on the unsigned system
    B = A[np.ix_(keep, tab.basis)]
    y_keep = np.linalg.lstsq(B.T, c[tab.basis], rcond=None)[0]
    y = np.zeros(m)
    y[keep] = y_keep
    return LpSolution(
        LpStatus.OPTIMAL,
        x=x,
        objective=inst.objective(x),
        y_ub=y[:m_ub],
        y_eq=y[m_ub + m_b:],
        iterations=tab.iterations,
        method="simplex",
    )

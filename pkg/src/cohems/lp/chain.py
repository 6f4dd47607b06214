"""Exact solver for linear objectives over one residence's feasible set.

Without the power ceiling the set splits into independent chains
``lower <= d <= upper``, ``d`` nondecreasing from a fixed start. A
linear cost on the levels is then a cost per launch slot, and each unit
of launch mass can be placed at the cheapest slot between the time it
becomes available and the time it falls due. If the resulting plan
also respects the power ceiling it is optimal for the full set;
otherwise the problem goes to the general LP solver.

Ties are broken towards the earliest launch, which yields the pointwise
largest optimal departure levels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .feasible import FeasibleSet
from .instance import LpInstance, LpStatus
from .solve import solve_lp


class SubproblemInfeasibleError(RuntimeError):
    pass


@dataclass
class Plan:
    levels: np.ndarray   # (N*n,)
    value: float         # optimal value of level_costs @ levels
    path: str            # "chain" or "lp"


def launch_costs(level_costs: np.ndarray) -> np.ndarray:
    """Cost of one unit launched at each slot: suffix sums of level costs."""
    return np.cumsum(level_costs[::-1])[::-1]


def solve_chain(level_costs, lower, upper, start, tie_tol: float = 1e-12) -> np.ndarray:
    """Minimise ``level_costs @ d`` over one appliance's chain constraints."""
    v = np.asarray(level_costs, dtype=float)
    lo = np.maximum(np.asarray(lower, dtype=float), start)
    up = np.asarray(upper, dtype=float)
    n = v.size
    total = up[-1]
    d = np.full(n, float(start))
    if total <= start + 1e-12:
        return d
    c = launch_costs(v)
    qs = np.unique(np.concatenate(([start], lo, up)))
    qs = qs[(qs >= start) & (qs <= total)]
    width = np.diff(qs)
    keep = width > 1e-15
    qb, width = qs[1:][keep], width[keep]
    # a segment is available once up >= qb and due once lo >= qb
    r = np.searchsorted(up, qb - 1e-12, side="left")
    e = np.minimum(np.maximum(np.searchsorted(lo, qb - 1e-12, side="left"), r), n - 1)
    j = np.arange(n)
    inside = (j >= r[:, None]) & (j <= e[:, None])
    costs = np.where(inside, c, np.inf)
    scale = tie_tol * (1.0 + np.max(np.abs(c), initial=0.0))
    t = np.argmax(costs <= costs.min(axis=1, keepdims=True) + scale, axis=1)
    inc = np.bincount(t, weights=width, minlength=n)
    d += np.cumsum(inc)
    return np.minimum(np.maximum(d, lo), up)


def relieve_power_ceiling(fs: FeasibleSet, method: str = "auto") -> np.ndarray:
    """Raise the power rows of ``fs`` by the least total amount that restores feasibility.

    With fractional mean arrivals the expected launches of several jobs
    can overlap beyond the ceiling even though no realised schedule has
    to. Only planned (not committed) slots are affected; the ceiling on
    committed launches is enforced separately. Returns the relief per
    slot and updates ``fs`` in place.
    """
    A, b = fs.inequalities()
    lb, ub = fs.bounds()
    nd, n = A.shape[1], fs.n_slots
    n_mono = A.shape[0] - n
    w_cols = sp.vstack([sp.csr_matrix((n_mono, n)), -sp.identity(n, format="csr")], format="csr")
    inst = LpInstance(np.concatenate([np.zeros(nd), np.ones(n)]),
                      A_ub=sp.hstack([A, w_cols], format="csr"), b_ub=b,
                      lb=np.concatenate([lb, np.zeros(n)]), ub=np.concatenate([ub, np.full(n, np.inf)]))
    sol = solve_lp(inst, method=method)
    if sol.status is not LpStatus.OPTIMAL:
        raise SubproblemInfeasibleError(f"residence set without power rows is {sol.status.value}")
    w = np.maximum(sol.x[nd:], 0.0)
    w = np.where(w > 0, w + 1e-9 * (1.0 + np.abs(fs.pmax_rhs)), 0.0)
    fs.pmax_rhs = fs.pmax_rhs + w
    fs.power_relief = w if fs.power_relief is None else fs.power_relief + w
    return w


def _lp_plan(fs: FeasibleSet, level_costs: np.ndarray, method: str) -> Plan:
    A, b = fs.inequalities()
    lb, ub = fs.bounds()
    inst = LpInstance(level_costs, A_ub=A, b_ub=b, lb=lb, ub=ub)
    sol = solve_lp(inst, method=method)
    if sol.status is LpStatus.INFEASIBLE and fs.power_relief is None:
        relieve_power_ceiling(fs, method)
        A, b = fs.inequalities()
        inst = LpInstance(level_costs, A_ub=A, b_ub=b, lb=lb, ub=ub)
        sol = solve_lp(inst, method=method)
    if sol.status is not LpStatus.OPTIMAL:
        raise SubproblemInfeasibleError(f"residence subproblem {sol.status.value}")
    value = float(level_costs @ sol.x)
    # second stage: among optimal plans take the one with the largest levels
    scale = 1e-9 * (1.0 + abs(value))
    A2 = sp.vstack([A, sp.csr_matrix(level_costs[None, :])], format="csr")
    b2 = np.concatenate([b, [value + scale]])
    tie = solve_lp(LpInstance(-np.ones_like(level_costs), A_ub=A2, b_ub=b2, lb=lb, ub=ub), method=method)
    x = tie.x if tie.status is LpStatus.OPTIMAL else sol.x
    return Plan(np.clip(x, lb, ub), value, "lp")


def solve_linear_plan(fs: FeasibleSet, level_costs, method: str = "auto") -> Plan:
    """Minimise ``level_costs @ d`` over ``fs`` exactly."""
    v = np.asarray(level_costs, dtype=float)
    N, n = fs.n_appliances, fs.n_slots
    d = np.empty(N * n)
    for i in range(N):
        sl = slice(i * n, (i + 1) * n)
        d[sl] = solve_chain(v[sl], fs.lower[i], fs.upper[i], fs.start[i])
    load = fs.pmax_matrix @ d
    if np.all(load <= fs.pmax_rhs + 1e-9 * (1.0 + np.abs(fs.pmax_rhs))):
        return Plan(d, float(v @ d), "chain")
    return _lp_plan(fs, v, method)

from __future__ import annotations

import numpy as np
from scipy.optimize import linprog

from .instance import LpInstance, LpSolution, LpStatus
from .simplex import simplex_solve

# instances up to this many (rows x columns) go to the dense simplex under "auto"
DENSE_LIMIT = 5_000

_HIGHS_STATUS = {
    0: LpStatus.OPTIMAL,
    1: LpStatus.ITERATION_LIMIT,
    2: LpStatus.INFEASIBLE,
    3: LpStatus.UNBOUNDED,
}


def _highs(inst: LpInstance) -> LpSolution:
    bounds = np.column_stack([inst.lb, inst.ub])
    res = linprog(
        inst.c,
        A_ub=inst.A_ub if inst.b_ub.size else None,
        b_ub=inst.b_ub if inst.b_ub.size else None,
        A_eq=inst.A_eq if inst.b_eq.size else None,
        b_eq=inst.b_eq if inst.b_eq.size else None,
        bounds=bounds,
        method="highs",
    )
    status = _HIGHS_STATUS.get(res.status)
    if status is None:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    if status is not LpStatus.OPTIMAL:
        return LpSolution(status, iterations=int(getattr(res, "nit", 0)), method="highs")
    x = np.asarray(res.x, dtype=float)
    return LpSolution(
        status,
        x=x,
        objective=inst.objective(x),
        y_ub=np.asarray(res.ineqlin.marginals) if inst.b_ub.size else np.zeros(0),
        y_eq=np.asarray(res.eqlin.marginals) if inst.b_eq.size else np.zeros(0),
        iterations=int(res.nit),
        method="highs",
    )


def solve_lp(instance: LpInstance, method: str = "auto") -> LpSolution:
    """Solve ``instance``; failures are reported through ``status``.

    ``method`` is ``"simplex"`` (dense two-phase simplex), ``"highs"``
    (scipy's HiGHS, used for the large coordinated problems) or
    ``"auto"``, which picks the simplex for instances small enough to
    solve densely.
    """
    if method == "auto":
        size = (instance.n_rows + 1) * (2 * instance.n_vars + instance.n_rows + 1)
        method = "simplex" if size <= DENSE_LIMIT else "highs"
    if method == "simplex":
        return simplex_solve(instance)
    if method == "highs":
        return _highs(instance)
    raise ValueError(f"unknown LP method {method!r}")

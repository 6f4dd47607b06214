"""Linear program containers and certificate helpers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

FEAS_TOL = 1e-8
OPT_TOL = 1e-9


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration-limit"


def _matrix(A, ncols):
    if A is None:
        return sp.csr_matrix((0, ncols))
    if sp.issparse(A):
        return sp.csr_matrix(A, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return sp.csr_matrix((0, ncols))
    return sp.csr_matrix(A)


@dataclass
class LpInstance:
    """``min c @ x + constant`` s.t. ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``lb <= x <= ub``.

    Constraint matrices may be given dense or as scipy sparse; they are
    stored in CSR form. ``lb`` defaults to zero and ``ub`` to ``+inf``.
    """

    c: np.ndarray
    A_ub: object = None
    b_ub: np.ndarray = None
    A_eq: object = None
    b_eq: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None
    constant: float = 0.0
    names: list = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ub = _matrix(self.A_ub, n)
        self.A_eq = _matrix(self.A_eq, n)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).ravel()
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float).ravel()
        self.lb = np.zeros(n) if self.lb is None else np.broadcast_to(
            np.asarray(self.lb, dtype=float), (n,)).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.broadcast_to(
            np.asarray(self.ub, dtype=float), (n,)).copy()
        if self.A_ub.shape != (self.b_ub.size, n):
            raise ValueError(f"A_ub shape {self.A_ub.shape} does not match ({self.b_ub.size}, {n})")
        if self.A_eq.shape != (self.b_eq.size, n):
            raise ValueError(f"A_eq shape {self.A_eq.shape} does not match ({self.b_eq.size}, {n})")
        finite = [self.c, self.A_ub.data, self.A_eq.data, self.b_ub, self.b_eq]
        if not all(np.all(np.isfinite(v)) for v in finite):
            raise ValueError("LP coefficients must be finite")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)):
            raise ValueError("NaN variable bound")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.b_ub.size + self.b_eq.size

    def objective(self, x) -> float:
        return float(self.c @ x + self.constant)

    def residuals(self, x) -> dict:
        """Largest violation of each constraint family at ``x``."""
        x = np.asarray(x, dtype=float)
        ub_viol = self.A_ub @ x - self.b_ub
        eq_viol = self.A_eq @ x - self.b_eq
        return {
            "ub": float(np.max(ub_viol, initial=0.0)),
            "eq": float(np.max(np.abs(eq_viol), initial=0.0)),
            "lb": float(np.max(self.lb - x, initial=0.0)),
            "bound_ub": float(np.max(x - self.ub, initial=0.0)),
        }

    def max_violation(self, x) -> float:
        return max(self.residuals(x).values())

    def is_feasible(self, x, tol: float = FEAS_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        scale = 1.0 + max(np.max(np.abs(self.b_ub), initial=0.0),
                          np.max(np.abs(self.b_eq), initial=0.0))
        return self.max_violation(x) <= tol * scale


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    y_ub: np.ndarray | None = None
    y_eq: np.ndarray | None = None
    iterations: int = 0
    method: str = ""
    feasibility_tol: float = FEAS_TOL
    optimality_tol: float = OPT_TOL

    @property
    def ok(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def dual_bound(instance: LpInstance, y_ub, y_eq) -> float:
    """Lagrangian lower bound on the optimum for multipliers ``(y_ub, y_eq)``.

    ``y_ub`` follows the ``<= 0`` sign convention for minimisation; any
    positive entries are clipped so the result is always a valid bound
    (possibly ``-inf``).
    """
    y_ub = np.minimum(np.asarray(y_ub, dtype=float).ravel(), 0.0) if instance.b_ub.size else np.zeros(0)
    y_eq = np.asarray(y_eq, dtype=float).ravel() if instance.b_eq.size else np.zeros(0)
    r = instance.c - instance.A_ub.T @ y_ub - instance.A_eq.T @ y_eq
    scale = 1.0 + np.max(np.abs(instance.c), initial=0.0)
    r = np.where(np.abs(r) <= 1e-10 * scale, 0.0, r)
    value = float(instance.b_ub @ y_ub + instance.b_eq @ y_eq + instance.constant)
    pos, neg = r > 0, r < 0
    if np.any(pos & ~np.isfinite(instance.lb)) or np.any(neg & ~np.isfinite(instance.ub)):
        return -np.inf
    value += float(r[pos] @ instance.lb[pos] + r[neg] @ instance.ub[neg])
    return value


def write_lp_file(instance: LpInstance, path) -> None:
    """Dump ``instance`` in a plain LP-style text format for cross-checking."""
    n = instance.n_vars
    names = instance.names or [f"x{j}" for j in range(n)]

    def expr(coefs, cols):
        terms = [f"{'+' if v >= 0 else '-'} {abs(v):.17g} {names[j]}" for j, v in zip(cols, coefs) if v != 0]
        return " ".join(terms) if terms else "0"

    lines = ["\\ generated by cohems", "Minimize", f" obj: {expr(instance.c, range(n))}"]
    if instance.constant:
        lines.append(f" \\ constant {instance.constant:.17g}")
    lines.append("Subject To")
    for tag, A, b, op in (("u", instance.A_ub, instance.b_ub, "<="), ("e", instance.A_eq, instance.b_eq, "=")):
        for r in range(A.shape[0]):
            row = A.getrow(r)
            lines.append(f" {tag}{r}: {expr(row.data, row.indices)} {op} {b[r]:.17g}")
    lines.append("Bounds")
    for j in range(n):
        lo, hi = instance.lb[j], instance.ub[j]
        lo_s = "-inf" if np.isneginf(lo) else f"{lo:.17g}"
        hi_s = "+inf" if np.isposinf(hi) else f"{hi:.17g}"
        lines.append(f" {lo_s} <= {names[j]} <= {hi_s}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

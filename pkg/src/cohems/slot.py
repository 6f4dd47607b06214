"""The deterministic problem solved at one decision slot.

At slot ``first`` the certainty-equivalent problem over slots
``first..L`` is fully described by each residence's :class:`PsiOperator`
and :class:`FeasibleSet`, the net supply ``E - sum U`` and the prices.
Both the centralized LP and the dual decomposition consume this object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lp import FeasibleSet, LpInstance, PsiOperator, assemble_feasible_set
from .scenario import Scenario


@dataclass
class ResidenceBlock:
    psi: PsiOperator
    feasible: FeasibleSet

    @property
    def n_vars(self) -> int:
        return self.psi.decision.shape[1]

    def load(self, d) -> np.ndarray:
        return self.psi.decision @ d + self.feasible.history_load


@dataclass
class SlotProblem:
    first: int
    horizon: int
    blocks: list
    net_supply: np.ndarray   # E - sum_m U^(m) on slots first..L
    pi_p: np.ndarray
    pi_s: np.ndarray

    @property
    def n_slots(self) -> int:
        return self.horizon - self.first + 1

    @property
    def offsets(self) -> np.ndarray:
        return np.cumsum([0] + [b.n_vars for b in self.blocks])

    def aggregate_load(self, plans) -> np.ndarray:
        return np.sum([b.load(d) for b, d in zip(self.blocks, plans)], axis=0)

    def objective(self, plans) -> float:
        """Real-time imbalance cost over slots ``first..L`` for given plans."""
        y = self.aggregate_load(plans) - self.net_supply
        return float(self.pi_p @ np.maximum(y, 0.0) + self.pi_s @ np.maximum(-y, 0.0))

    def split(self, x) -> list:
        off = self.offsets
        return [np.asarray(x[off[m]:off[m + 1]]) for m in range(len(self.blocks))]


def build_slot_problem(scenario: Scenario, committed: np.ndarray, slot: int,
                       supply: np.ndarray, pi_p, pi_s, residences=None) -> SlotProblem:
    """Assemble the problem at ``slot`` using arrivals revealed up to ``slot``.

    ``committed`` is ``(M, N, L)``; only columns before ``slot`` are read.
    """
    L = scenario.horizon
    idx = range(scenario.n_residences) if residences is None else residences
    blocks = []
    u_total = np.zeros(L - slot + 1)
    for m in idx:
        res = scenario.residences[m]
        psi = PsiOperator.from_residence(res, slot, L)
        fs = assemble_feasible_set(res, scenario.arrivals[m, :, :slot], scenario.rates[m],
                                   committed[m], slot, psi=psi, residence_id=m)
        blocks.append(ResidenceBlock(psi, fs))
        u_total += res.uncontrollable_load[slot - 1:]
    sl = slice(slot - 1, L)
    return SlotProblem(slot, L, blocks, np.asarray(supply, dtype=float)[sl] - u_total,
                       np.asarray(pi_p, dtype=float)[sl], np.asarray(pi_s, dtype=float)[sl])


def residence_rows(block: ResidenceBlock, col0: int, n_total: int):
    A, b = block.feasible.inequalities()
    A = sp.hstack([sp.csr_matrix((A.shape[0], col0)), A,
                   sp.csr_matrix((A.shape[0], n_total - col0 - A.shape[1]))], format="csr")
    return A, b


def build_cec_lp(problem: SlotProblem) -> LpInstance:
    """Relaxed CEC problem with slack ``z`` as an LP.

    Variables are the stacked departure levels of every residence
    followed by ``z`` (one per remaining slot). The objective is
    ``(pi_s + pi_p) @ z - pi_s @ (load - net_supply)``, subject to
    ``z >= 0``, ``z >= load - net_supply`` and each residence's set.
    """
    if np.any(problem.pi_p + problem.pi_s < 0):
        raise ValueError("pi_p + pi_s must be nonnegative")
    n = problem.n_slots
    off = problem.offsets
    n_d = int(off[-1])
    n_total = n_d + n
    psi_all = sp.hstack([b.psi.decision for b in problem.blocks], format="csr")
    hist = np.sum([b.feasible.history_load for b in problem.blocks], axis=0)
    resid = problem.net_supply - hist

    c = np.concatenate([-(psi_all.T @ problem.pi_s), problem.pi_s + problem.pi_p])
    constant = float(problem.pi_s @ resid)

    rows = [sp.hstack([psi_all, -sp.identity(n, format="csr")], format="csr")]
    rhs = [resid]
    for m, block in enumerate(problem.blocks):
        A, b = residence_rows(block, int(off[m]), n_total)
        rows.append(A)
        rhs.append(b)
    lb = np.concatenate([b.feasible.lower.ravel() for b in problem.blocks] + [np.zeros(n)])
    ub = np.concatenate([b.feasible.upper.ravel() for b in problem.blocks] + [np.full(n, np.inf)])
    return LpInstance(c, A_ub=sp.vstack(rows, format="csr"), b_ub=np.concatenate(rhs),
                      lb=lb, ub=ub, constant=constant)


def earliest_launch_lp(inst: LpInstance, optimum: float, n_levels: int) -> LpInstance:
    """Among plans within a hair of ``optimum``, maximise the summed levels.

    Larger departure levels mean earlier launches; this is the same
    tie-break the residence subproblems use.
    """
    slack = 1e-9 * (1.0 + abs(optimum))
    c2 = np.zeros(inst.n_vars)
    c2[:n_levels] = -1.0
    A = sp.vstack([inst.A_ub, sp.csr_matrix(inst.c[None, :])], format="csr")
    b = np.concatenate([inst.b_ub, [optimum - inst.constant + slack]])
    return LpInstance(c2, A_ub=A, b_ub=b, A_eq=inst.A_eq, b_eq=inst.b_eq, lb=inst.lb, ub=inst.ub)

"""Per-residence feasible set of departure levels at a decision slot."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..appliance import Residence
from .operators import PsiOperator

_TOL = 1e-9


class InfeasibleBoxError(ValueError):
    """Lower bound exceeds upper bound for some appliance and slot."""

    def __init__(self, residence, appliance, slot, lower, upper):
        self.residence, self.appliance, self.slot = residence, appliance, slot
        super().__init__(
            f"residence {residence} appliance {appliance} slot {slot}: "
            f"lower bound {lower:g} exceeds upper bound {upper:g}"
        )


def expected_levels(arrivals_so_far, rates, slot: int, horizon: int) -> np.ndarray:
    """Certainty-equivalent arrival counts over slots ``1..L``.

    Realised counts up to ``slot``; afterwards the last realised count plus
    accumulated rates.
    """
    a = np.asarray(arrivals_so_far, dtype=float)[:slot]
    r = np.asarray(rates, dtype=float)
    out = np.empty(horizon)
    out[:slot] = a
    out[slot:] = a[slot - 1] + np.cumsum(r[slot:horizon])
    return out


def phi_vector(arrivals_so_far, rates, max_delay: int, slot: int, horizon: int) -> np.ndarray:
    """Deadline lower bounds on ``d(l)`` for ``l = slot..L``."""
    levels = expected_levels(arrivals_so_far, rates, slot, horizon)
    ells = np.arange(slot, horizon + 1) - max_delay
    return np.where(ells >= 1, levels[np.clip(ells, 1, horizon) - 1], 0.0)


def phi_lower_bound(arrivals_so_far, rates, max_delay: int, slot: int, ell: int) -> float:
    """Deadline lower bound on ``d(ell)`` seen from decision slot ``slot``."""
    horizon = len(rates)
    if not slot <= ell <= horizon:
        raise ValueError("ell must lie in slot..L")
    return float(phi_vector(arrivals_so_far, rates, max_delay, slot, horizon)[ell - slot])


@dataclass
class FeasibleSet:
    """Bounds, monotonicity and power rows describing one residence's set.

    Variables follow :class:`PsiOperator` ordering. The terminal equality
    is carried as ``lower[:, -1] == upper[:, -1]``.
    """

    slot: int
    horizon: int
    lower: np.ndarray          # (N, n)
    upper: np.ndarray          # (N, n)
    start: np.ndarray          # (N,) committed d(slot-1)
    pmax_matrix: sp.csr_matrix # (n, N*n)
    pmax_rhs: np.ndarray       # (n,)
    history_load: np.ndarray   # (n,)
    power_relief: np.ndarray | None = None   # set when the power rows had to be raised

    @property
    def n_slots(self) -> int:
        return self.horizon - self.slot + 1

    @property
    def n_appliances(self) -> int:
        return self.lower.shape[0]

    @property
    def terminal(self) -> np.ndarray:
        return self.upper[:, -1]

    def monotone_rows(self) -> sp.csr_matrix:
        """Rows ``d(l-1) - d(l) <= 0`` within each appliance block."""
        n, N = self.n_slots, self.n_appliances
        if n < 2:
            return sp.csr_matrix((0, N * n))
        block = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, 1], shape=(n - 1, n))
        return sp.block_diag([block] * N, format="csr")

    def inequalities(self):
        mono = self.monotone_rows()
        A = sp.vstack([mono, self.pmax_matrix], format="csr")
        b = np.concatenate([np.zeros(mono.shape[0]), self.pmax_rhs])
        return A, b

    def bounds(self):
        return self.lower.ravel(), self.upper.ravel()

    def violations(self, d, tol: float = 1e-7) -> dict:
        d = np.asarray(d, dtype=float).reshape(self.lower.shape)
        prev = np.concatenate([self.start[:, None], d[:, :-1]], axis=1)
        return {
            "lower": float(np.max(self.lower - d, initial=0.0)),
            "upper": float(np.max(d - self.upper, initial=0.0)),
            "monotone": float(np.max(prev - d, initial=0.0)),
            "pmax": float(np.max(self.pmax_matrix @ d.ravel() - self.pmax_rhs, initial=0.0)),
        }

    def contains(self, d, tol: float = 1e-7) -> bool:
        scale = 1.0 + float(np.max(np.abs(self.upper), initial=0.0))
        return max(self.violations(d).values()) <= tol * scale


def assemble_feasible_set(residence: Residence, arrivals_so_far, rates, committed,
                          slot: int, psi: PsiOperator | None = None,
                          residence_id: int = 0) -> FeasibleSet:
    """Feasible departure levels of ``residence`` from decision slot ``slot``.

    ``arrivals_so_far`` and ``committed`` are ``(N, >=slot)`` and
    ``(N, >=slot-1)`` arrays; only their first ``slot`` resp. ``slot-1``
    columns are read. ``rates`` is ``(N, L)``.
    """
    L = residence.horizon
    N = len(residence.appliances)
    n = L - slot + 1
    if psi is None:
        psi = PsiOperator.from_residence(residence, slot, L)
    committed = np.asarray(committed, dtype=float)
    lower = np.empty((N, n))
    upper = np.empty((N, n))
    start = np.zeros(N)
    for i, app in enumerate(residence.appliances):
        levels = expected_levels(arrivals_so_far[i], rates[i], slot, L)
        phi = phi_vector(arrivals_so_far[i], rates[i], app.max_delay, slot, L)
        start[i] = committed[i, slot - 2] if slot >= 2 else 0.0
        upper[i] = levels[slot - 1:]
        lower[i] = np.maximum(np.maximum.accumulate(phi), start[i])
        lower[i, -1] = upper[i, -1]
        bad = np.flatnonzero(lower[i] > upper[i] + _TOL)
        if bad.size:
            k = int(bad[0])
            raise InfeasibleBoxError(residence_id, i, slot + k, lower[i, k], upper[i, k])
        lower[i] = np.minimum(lower[i], upper[i])
    hist = psi.history_offset(committed)
    return FeasibleSet(slot, L, lower, upper, start, psi.decision,
                       residence.p_max - hist, hist)

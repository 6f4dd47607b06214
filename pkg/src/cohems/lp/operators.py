"""Convolution operators mapping departure levels to per-slot load.

:func:`build_omega` and :func:`build_upsilon` use the reversed ordering
(latest slot first) of the compact matrix form; :class:`PsiOperator`
re-expresses their product in forward slot order and splits it into the
decision part (slots ``first..L``) and the fixed history part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import toeplitz

from ..appliance import LoadProfile, Residence


def history_length(duration: int, slot: int) -> int:
    return min(slot, duration)


def build_omega(profile: LoadProfile, slot: int, horizon: int) -> np.ndarray:
    """Toeplitz profile matrix of shape ``(L-slot+1, L-slot+min(slot, G))``."""
    if not 1 <= slot <= horizon:
        raise ValueError("slot must lie in 1..horizon")
    g = profile.energy_per_slot
    rows = horizon - slot + 1
    cols = horizon - slot + history_length(profile.duration, slot)
    first_row = np.zeros(cols)
    first_row[:min(cols, g.size)] = g[:cols]
    first_col = np.zeros(rows)
    first_col[0] = g[0]
    return toeplitz(first_col, first_row)


def build_upsilon(duration: int, slot: int, horizon: int) -> np.ndarray:
    """Difference matrix with first row ``[1, -1, 0, ...]``."""
    if not 1 <= slot <= horizon:
        raise ValueError("slot must lie in 1..horizon")
    rows = horizon - slot + history_length(duration, slot)
    first_row = np.zeros(rows + 1)
    first_row[:2] = [1.0, -1.0]
    first_col = np.zeros(rows)
    first_col[0] = 1.0
    return toeplitz(first_col, first_row)


@dataclass
class PsiOperator:
    """Per-residence map from stacked departure levels to controllable load.

    Decision variables are ordered appliance-major and forward in time:
    column ``i * n + (l - first)`` is ``d_i(l)`` for ``l = first..L``.
    """

    first: int
    horizon: int
    omegas: list
    upsilons: list
    decision: sp.csr_matrix      # (n, N*n)
    history: list                # per appliance (n, h_i) forward-ordered history columns
    history_slots: list          # per appliance slot numbers of the history columns

    @classmethod
    def from_residence(cls, residence: Residence, slot: int, horizon: int | None = None) -> "PsiOperator":
        L = residence.horizon if horizon is None else int(horizon)
        n = L - slot + 1
        omegas, upsilons, dec_blocks, hist, hist_slots = [], [], [], [], []
        for app in residence.appliances:
            G = app.profile.duration
            om = build_omega(app.profile, slot, L)
            up = build_upsilon(G, slot, L)
            psi = om @ up
            # reversed rows/cols -> forward: rows slots first..L, cols slots first-h..L
            fwd = psi[::-1, ::-1]
            h = history_length(G, slot)
            omegas.append(om)
            upsilons.append(up)
            dec_blocks.append(sp.csr_matrix(fwd[:, h:]))
            hist.append(np.ascontiguousarray(fwd[:, :h]))
            hist_slots.append(np.arange(slot - h, slot))
        decision = sp.hstack(dec_blocks, format="csr") if dec_blocks else sp.csr_matrix((n, 0))
        return cls(slot, L, omegas, upsilons, decision, hist, hist_slots)

    @property
    def n_slots(self) -> int:
        return self.horizon - self.first + 1

    @property
    def n_appliances(self) -> int:
        return len(self.omegas)

    def history_offset(self, committed: np.ndarray) -> np.ndarray:
        """Load on slots ``first..L`` caused by launches before ``first``.

        ``committed`` has one row per appliance holding ``d_i(1..first-1)``
        (extra trailing columns are ignored).
        """
        off = np.zeros(self.n_slots)
        for i, (H, slots) in enumerate(zip(self.history, self.history_slots)):
            if H.shape[1] == 0:
                continue
            levels = np.array([committed[i, s - 1] if s >= 1 else 0.0 for s in slots], dtype=float)
            off += H @ levels
        return off

    def apply(self, d: np.ndarray, committed: np.ndarray | None = None) -> np.ndarray:
        """Per-slot controllable load for stacked decision levels ``d``."""
        load = self.decision @ np.asarray(d, dtype=float)
        if committed is not None:
            load = load + self.history_offset(committed)
        return load

    def apply_extended(self, extended: list) -> np.ndarray:
        """Load from extended vectors (latest slot first), one per appliance."""
        load = np.zeros(self.n_slots)
        for om, up, d_ext in zip(self.omegas, self.upsilons, extended):
            load += (om @ (up @ np.asarray(d_ext, dtype=float)))[::-1]
        return load

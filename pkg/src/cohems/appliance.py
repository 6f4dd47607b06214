"""
Deferrable appliance load model.

Sequences indexed by slot are stored as 1-D arrays where position ``k``
holds slot ``k + 1``; the value at slot 0 of a counting process is
implicitly zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_TOL = 1e-9


@dataclass(frozen=True)
class LoadProfile:
    """Energy drawn in each slot after a launch (kWh per slot)."""

    energy_per_slot: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.energy_per_slot, dtype=float).ravel()
        if g.size < 1:
            raise ValueError("load profile needs at least one slot")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ValueError("load profile entries must be finite and nonnegative")
        if g[0] <= 0:
            raise ValueError("load profile must draw energy in its first slot")
        object.__setattr__(self, "energy_per_slot", g)

    @classmethod
    def rectangular(cls, energy: float, duration: int) -> "LoadProfile":
        return cls(np.full(int(duration), float(energy)))

    @property
    def duration(self) -> int:
        return int(self.energy_per_slot.size)

    @property
    def total_energy(self) -> float:
        return float(self.energy_per_slot.sum())


@dataclass(frozen=True)
class ArrivalProcess:
    """Cumulative request counts ``a(1..L)`` and per-slot request rates."""

    counts: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.counts, dtype=np.int64).ravel()
        r = np.asarray(self.rates, dtype=float).ravel()
        if a.shape != r.shape:
            raise ValueError("counts and rates must have the same length")
        inc = np.diff(a, prepend=0)
        if np.any((inc != 0) & (inc != 1)):
            raise ValueError("arrival counts must grow by 0 or 1 per slot")
        if np.any(r < 0) or np.any(r > 1):
            raise ValueError("arrival rates must lie in [0, 1]")
        object.__setattr__(self, "counts", a)
        object.__setattr__(self, "rates", r)

    @property
    def horizon(self) -> int:
        return int(self.counts.size)


@dataclass(frozen=True)
class DepartureProcess:
    """Cumulative launch counts ``d(1..L)``; fractional inside relaxations."""

    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=float).ravel())

    @classmethod
    def from_launches(cls, launches: Sequence[int], horizon: int) -> "DepartureProcess":
        return cls(departures_from_launches(launches, horizon))


@dataclass(frozen=True)
class ApplianceSpec:
    profile: LoadProfile
    max_delay: int

    def __post_init__(self):
        if int(self.max_delay) != self.max_delay or self.max_delay < 0:
            raise ValueError("max_delay must be a nonnegative integer")
        object.__setattr__(self, "max_delay", int(self.max_delay))


@dataclass(frozen=True)
class Residence:
    """A home with ``N`` deferrable appliances and a known base load."""

    appliances: tuple
    uncontrollable_load: np.ndarray
    p_max: float
    appliance_names: tuple = field(default=())

    def __post_init__(self):
        u = np.asarray(self.uncontrollable_load, dtype=float).ravel()
        if np.any(u < 0):
            raise ValueError("uncontrollable load must be nonnegative")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        object.__setattr__(self, "appliances", tuple(self.appliances))
        object.__setattr__(self, "uncontrollable_load", u)
        object.__setattr__(self, "p_max", float(self.p_max))

    @property
    def horizon(self) -> int:
        return int(self.uncontrollable_load.size)


@dataclass(frozen=True)
class Violation:
    slot: int
    constraint: str
    detail: str

    def __str__(self):
        return f"slot {self.slot}: {self.constraint} ({self.detail})"


def _as_levels(d) -> np.ndarray:
    if isinstance(d, (DepartureProcess, ArrivalProcess)):
        d = d.counts
    return np.asarray(d, dtype=float).ravel()


def load_injection(profile: LoadProfile, departures, horizon: int | None = None) -> np.ndarray:
    """Energy per slot drawn by jobs launched according to ``departures``.

    Each unit increment of the departure process at slot ``s`` places
    ``g(1)`` at slot ``s``, ``g(2)`` at ``s + 1`` and so on; profiles
    running past the horizon are truncated.
    """
    d = _as_levels(departures)
    L = d.size if horizon is None else int(horizon)
    d = d[:L]
    inc = np.diff(d, prepend=0.0)
    return np.convolve(inc, profile.energy_per_slot)[:L]


def unscheduled_injection(profile: LoadProfile, arrivals, horizon: int | None = None) -> np.ndarray:
    """Load injection when every request is launched on arrival."""
    return load_injection(profile, _as_levels(arrivals), horizon)


def extract_schedule(departures) -> tuple:
    """Launch times ``s_k = min{l : d(l) >= k}`` for ``k = 1..d(L)``."""
    d = _as_levels(departures)
    if d.size == 0:
        return ()
    if np.any(np.abs(d - np.round(d)) > _TOL):
        raise ValueError("launch times are defined for integer departure processes only")
    d = np.round(d).astype(np.int64)
    ks = np.arange(1, int(d[-1]) + 1)
    return tuple(int(s) + 1 for s in np.searchsorted(d, ks, side="left"))


def departures_from_launches(launches: Sequence[int], horizon: int) -> np.ndarray:
    """Inverse of :func:`extract_schedule`."""
    d = np.zeros(int(horizon), dtype=np.int64)
    for s in launches:
        if not 1 <= s <= horizon:
            raise ValueError(f"launch time {s} outside 1..{horizon}")
        d[s - 1] += 1
    return np.cumsum(d)


def sample_arrivals(rates, rng: np.random.Generator) -> ArrivalProcess:
    """Draw one request indicator per slot, independently Bernoulli(rate)."""
    r = np.asarray(rates, dtype=float).ravel()
    if np.any(r < 0) or np.any(r > 1) or not np.all(np.isfinite(r)):
        raise ValueError("arrival rates must lie in [0, 1]")
    inc = rng.random(r.size) < r
    return ArrivalProcess(np.cumsum(inc), r)


def lagged(a: np.ndarray, lag: int) -> np.ndarray:
    """``a(l - lag)`` for every slot, with zero before slot 1."""
    a = np.asarray(a)
    if lag <= 0:
        return a.copy()
    out = np.zeros_like(a)
    if lag < a.size:
        out[lag:] = a[:-lag]
    return out


def check_departure_feasibility(departures, arrivals, max_delay: int,
                                horizon: int | None = None, tol: float = _TOL) -> list:
    """Check a departure process against the scheduling constraints.

    Returns a list of :class:`Violation`; an empty list means feasible.
    """
    d = _as_levels(departures)
    a = _as_levels(arrivals)
    L = min(d.size, a.size) if horizon is None else int(horizon)
    if d.size < L or a.size < L:
        raise ValueError("sequences shorter than the horizon")
    d, a = d[:L], a[:L]
    violations = []
    prev = np.concatenate(([0.0], d[:-1]))
    due = lagged(a, max_delay)

    for k in np.flatnonzero(d < -tol):
        violations.append(Violation(int(k) + 1, "nonnegative", f"d={d[k]:g}"))
    for k in np.flatnonzero(d < prev - tol):
        violations.append(Violation(int(k) + 1, "nondecreasing", f"d={d[k]:g} < d(prev)={prev[k]:g}"))
    for k in np.flatnonzero(d > a + tol):
        violations.append(Violation(int(k) + 1, "launch after request", f"d={d[k]:g} > a={a[k]:g}"))
    for k in np.flatnonzero(d < due - tol):
        violations.append(Violation(int(k) + 1, "deadline",
                                    f"a(l-{max_delay})={due[k]:g} > d={d[k]:g}"))
    if L and abs(d[-1] - a[-1]) > tol:
        violations.append(Violation(L, "terminal", f"d(L)={d[-1]:g} != a(L)={a[-1]:g}"))
    return sorted(violations, key=lambda v: v.slot)


def launched_energy(profile: LoadProfile, departures, horizon: int | None = None) -> float:
    """Energy of all launches, each truncated at the horizon end."""
    d = _as_levels(departures)
    L = d.size if horizon is None else int(horizon)
    cum = np.cumsum(profile.energy_per_slot)
    total = 0.0
    for s in extract_schedule(d[:L]):
        total += cum[min(profile.duration, L - s + 1) - 1]
    return float(total)

"""Receding-horizon certainty-equivalent scheduling.

At every slot the controller fixes unknown future requests at their
means, solves the relaxed deterministic problem over the rest of the
horizon, and commits only the current slot's (rounded) departures.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .appliance import check_departure_feasibility, load_injection
from .dual import DualConfig, run_algorithm2
from .lp import (
    LpStatus,
    phi_lower_bound,
    phi_vector,
    relieve_power_ceiling,
    solve_linear_plan,
    solve_lp,
)
from .scenario import Scenario, expected_unscheduled_load
from .slot import SlotProblem, build_cec_lp, build_slot_problem, earliest_launch_lp

log = logging.getLogger(__name__)

__all__ = [
    "CecConfig", "ControllerState", "ScheduleResult", "ScenarioInfeasibleError",
    "build_cec_lp", "commit_current_slot", "default_supply", "phi_lower_bound",
    "run_cec", "run_individual_hems", "run_unscheduled", "solve_slot", "validate_schedule",
]


class ScenarioInfeasibleError(RuntimeError):
    """A slot problem has no feasible schedule; carries a state dump."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump or {}


@dataclass
class CecConfig:
    pi_p: np.ndarray
    pi_s: np.ndarray
    supply: np.ndarray
    solver: str = "centralized"       # or "distributed"
    lp_method: str = "auto"
    dual: DualConfig = field(default_factory=DualConfig)
    reference_check: bool = False     # distributed: also solve centrally for comparison

    def __post_init__(self):
        self.supply = np.asarray(self.supply, dtype=float)
        L = self.supply.size
        self.pi_p = np.broadcast_to(np.asarray(self.pi_p, dtype=float), (L,)).copy()
        self.pi_s = np.broadcast_to(np.asarray(self.pi_s, dtype=float), (L,)).copy()
        if np.any(self.pi_p + self.pi_s < 0):
            raise ValueError("pi_p + pi_s must be nonnegative in every slot")
        if self.solver not in ("centralized", "distributed"):
            raise ValueError(f"unknown solver {self.solver!r}")


@dataclass
class ControllerState:
    """Committed departures and revealed arrivals at the current slot."""

    scenario: Scenario
    slot: int = 1
    committed: np.ndarray = None   # (M, N, L); columns >= slot-1 not yet meaningful

    def __post_init__(self):
        if self.committed is None:
            s = self.scenario
            self.committed = np.zeros((s.n_residences, s.n_appliances, s.horizon), dtype=np.int64)

    def revealed_arrivals(self) -> np.ndarray:
        return self.scenario.arrivals[:, :, :self.slot]

    def check_prefix(self) -> list:
        """Feasibility of the committed prefix against revealed arrivals."""
        bad = []
        k = self.slot - 1
        if k == 0:
            return bad
        for m, res in enumerate(self.scenario.residences):
            for i, app in enumerate(res.appliances):
                d = self.committed[m, i, :k]
                a = self.scenario.arrivals[m, i, :k]
                for v in check_departure_feasibility(d, a, app.max_delay, k):
                    if v.constraint != "terminal" or k == self.scenario.horizon:
                        bad.append((m, i, v))
        return bad

    def dump(self) -> dict:
        return {
            "slot": self.slot,
            "seed": self.scenario.seed,
            "committed": self.committed[:, :, :max(self.slot - 1, 0)].tolist(),
            "arrivals": self.revealed_arrivals().tolist(),
        }


@dataclass
class ScheduleResult:
    mode: str
    departures: np.ndarray          # (M, N, L) int
    residence_loads: np.ndarray     # (M, L) total incl. uncontrollable
    objective_trace: list
    convergence: list = field(default_factory=list)

    @property
    def aggregate_load(self) -> np.ndarray:
        return self.residence_loads.sum(axis=0)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "departures": self.departures.tolist(),
            "residence_loads": self.residence_loads.tolist(),
            "aggregate_load": self.aggregate_load.tolist(),
            "objective_trace": list(self.objective_trace),
            "convergence": self.convergence,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def to_csv(self) -> str:
        lines = ["slot,aggregate_load"]
        lines += [f"{k},{v!r}" for k, v in enumerate(self.aggregate_load.tolist(), start=1)]
        return "\n".join(lines) + "\n"


def default_supply(scenario: Scenario) -> np.ndarray:
    """Supply equal to the mean aggregate load without scheduling."""
    return expected_unscheduled_load(scenario)


def residence_loads(scenario: Scenario, departures: np.ndarray) -> np.ndarray:
    out = np.zeros((scenario.n_residences, scenario.horizon))
    for m, res in enumerate(scenario.residences):
        out[m] = res.uncontrollable_load
        for i, app in enumerate(res.appliances):
            out[m] += load_injection(app.profile, departures[m, i])
    return out


def _controllable_load(res, levels: np.ndarray) -> np.ndarray:
    load = np.zeros(res.horizon)
    for i, app in enumerate(res.appliances):
        load += load_injection(app.profile, levels[i])
    return load


def commit_current_slot(relaxed, state: ControllerState, residences=None) -> np.ndarray:
    """Round the relaxed current-slot departures into committed integers.

    ``relaxed`` is ``(M', N)`` for the residences in ``residences``
    (default all). Rounding is to the nearest integer, clamped to the
    deadline bound, then monotonicity, then the arrival count. A launch
    that would push a residence over its power ceiling is withdrawn if
    it is not forced by a deadline.
    """
    s = state.scenario
    t = state.slot
    idx = list(range(s.n_residences)) if residences is None else list(residences)
    out = np.zeros((len(idx), s.n_appliances), dtype=np.int64)
    for row, m in enumerate(idx):
        res = s.residences[m]
        lo = np.zeros(s.n_appliances, dtype=np.int64)
        for i, app in enumerate(res.appliances):
            a_now = int(s.arrivals[m, i, t - 1])
            prev = int(state.committed[m, i, t - 2]) if t >= 2 else 0
            deadline = int(np.ceil(phi_lower_bound(s.arrivals[m, i, :t], s.rates[m, i],
                                                   app.max_delay, t, t) - 1e-9))
            if t == s.horizon:
                deadline = a_now
            val = int(np.floor(float(relaxed[row][i]) + 0.5))
            val = max(val, deadline)
            val = max(val, prev)
            val = min(val, a_now)
            lo[i] = max(deadline, prev)
            if lo[i] > a_now:
                raise ScenarioInfeasibleError(
                    f"residence {m} appliance {i} slot {t}: no admissible commitment", state.dump())
            out[row, i] = val
        # power ceiling guard over the launches made so far
        levels = state.committed[m].astype(float).copy()
        for i in range(s.n_appliances):
            levels[i, t - 1:] = out[row, i]
        for i in reversed(range(s.n_appliances)):
            if np.all(_controllable_load(res, levels)[t - 1:] <= res.p_max + 1e-9):
                break
            if out[row, i] > lo[i]:
                out[row, i] = lo[i]
                levels[i, t - 1:] = lo[i]
        if np.any(_controllable_load(res, levels)[t - 1:] > res.p_max + 1e-9):
            raise ScenarioInfeasibleError(
                f"residence {m} slot {t}: deadline-forced launches exceed p_max {res.p_max:g}",
                state.dump())
    return out


def _record(state: ControllerState, committed_now: np.ndarray, residences=None):
    idx = range(state.scenario.n_residences) if residences is None else residences
    for row, m in enumerate(idx):
        state.committed[m, :, state.slot - 1] = committed_now[row]


def solve_slot(problem: SlotProblem, config: CecConfig, lambda0=None):
    """Solve one coordinated slot problem; returns ``(plans, objective, info)``."""
    info = {"slot": problem.first}
    reference = None
    if config.solver == "centralized" or config.reference_check:
        inst = build_cec_lp(problem)
        sol = solve_lp(inst, method=config.lp_method)
        if sol.status is LpStatus.INFEASIBLE:
            relieved = [b.feasible for b in problem.blocks if b.feasible.power_relief is None]
            for fs in relieved:
                relieve_power_ceiling(fs, config.lp_method)
            if relieved:
                log.info("slot %d: power rows relieved for %d residences", problem.first,
                         sum(bool(np.any(fs.power_relief > 0)) for fs in relieved))
                inst = build_cec_lp(problem)
                sol = solve_lp(inst, method=config.lp_method)
        if sol.status is not LpStatus.OPTIMAL:
            raise ScenarioInfeasibleError(f"slot {problem.first}: LP {sol.status.value}")
        x = sol.x
        tie = solve_lp(earliest_launch_lp(inst, sol.objective, int(problem.offsets[-1])),
                       method=config.lp_method)
        if tie.status is LpStatus.OPTIMAL:
            x = tie.x
        central_plans = problem.split(x)
        reference = problem.objective(central_plans)
        info["centralized_objective"] = reference
        if config.solver == "centralized":
            return central_plans, sol.objective, info
    res = run_algorithm2(problem, config.dual, lambda0=lambda0, reference=reference)
    info.update(res.report())
    info["lam"] = res.lam
    return res.plans, res.objective, info


def run_cec(scenario: Scenario, config: CecConfig) -> ScheduleResult:
    """Coordinated scheduling of all residences against the supply."""
    L = scenario.horizon
    state = ControllerState(scenario)
    trace, convergence = [], []
    lam = None
    for t in range(1, L):
        state.slot = t
        problem = build_slot_problem(scenario, state.committed, t, config.supply, config.pi_p, config.pi_s)
        warm = None
        if config.solver == "distributed" and config.dual.warm_start and lam is not None:
            warm = lam[1:]
        plans, value, info = solve_slot(problem, config, lambda0=warm)
        lam = info.pop("lam", None)
        trace.append(float(value))
        if config.solver == "distributed":
            convergence.append(info)
        n = problem.n_slots
        relaxed = [p.reshape(-1, n)[:, 0] for p in plans]
        _record(state, commit_current_slot(relaxed, state))
    state.slot = L
    final = [scenario.arrivals[m, :, L - 1] for m in range(scenario.n_residences)]
    _record(state, commit_current_slot(final, state))
    mode = "coordinated-" + ("distributed" if config.solver == "distributed" else "central")
    return ScheduleResult(mode, state.committed.copy(), residence_loads(scenario, state.committed),
                          trace, convergence)


def run_individual_hems(scenario: Scenario, prices, lp_method: str = "auto") -> ScheduleResult:
    """Each residence minimises its own expected bill under ``prices``."""
    prices = np.asarray(prices, dtype=float)
    L = scenario.horizon
    state = ControllerState(scenario)
    trace = []
    for t in range(1, L):
        state.slot = t
        total = 0.0
        relaxed = []
        for m in range(scenario.n_residences):
            problem = build_slot_problem(scenario, state.committed, t, np.zeros(L),
                                         np.zeros(L), np.zeros(L), residences=[m])
            block = problem.blocks[0]
            p = prices[t - 1:]
            plan = solve_linear_plan(block.feasible, block.psi.decision.T @ p, method=lp_method)
            total += plan.value + float(p @ block.feasible.history_load)
            relaxed.append(plan.levels.reshape(-1, problem.n_slots)[:, 0])
        trace.append(total)
        _record(state, commit_current_slot(relaxed, state))
    state.slot = L
    final = [scenario.arrivals[m, :, L - 1] for m in range(scenario.n_residences)]
    _record(state, commit_current_slot(final, state))
    return ScheduleResult("individual", state.committed.copy(), residence_loads(scenario, state.committed), trace)


def run_unscheduled(scenario: Scenario) -> ScheduleResult:
    deps = scenario.arrivals.copy()
    return ScheduleResult("unscheduled", deps, residence_loads(scenario, deps), [])


def validate_schedule(scenario: Scenario, result: ScheduleResult) -> list:
    """Every committed process checked against realised arrivals."""
    bad = []
    for m, res in enumerate(scenario.residences):
        for i, app in enumerate(res.appliances):
            for v in check_departure_feasibility(result.departures[m, i], scenario.arrivals[m, i],
                                                 app.max_delay, scenario.horizon):
                bad.append((m, i, v))
    return bad

"""Dual decomposition of the per-slot coordinated LP.

Each residence minimises its own load cost under the broadcast price
``lambda - pi_s``; the control center moves ``lambda`` along the
aggregate imbalance and projects it back onto ``[0, pi_p + pi_s]``.
Primal plans are recovered as running averages of the iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bus import PlanMessage, PriceMessage, make_bus
from .lp import solve_linear_plan
from .slot import ResidenceBlock, SlotProblem


@dataclass
class DualConfig:
    max_iter: int = 1000
    window: int = 25
    rel_tol: float = 1e-4
    step_scale: float = 1.0
    step_rule: str = "subgradient"   # or "operator"
    gap_tol: float | None = 1e-2     # relative; None stops on the best-dual plateau alone
    gap_abs: float = 1e-6
    warm_start: bool = True
    bus: str = "inprocess"
    check_invariants: bool = False


@dataclass
class DualState:
    lam: np.ndarray
    upper: np.ndarray
    step0: float
    iteration: int = 0
    average: list = field(default_factory=list)

    def step_size(self, n: int | None = None) -> float:
        n = self.iteration if n is None else n
        return self.step0 / np.sqrt(n + 1.0)


@dataclass
class DualResult:
    plans: list
    lam: np.ndarray
    iterations: int
    status: str
    objective: float
    best_dual: float
    dual_trace: list
    primal_trace: list
    plan_messages: int
    price_messages: int
    invariants: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "objective": self.objective,
            "best_dual": self.best_dual,
            "gap": self.objective - self.best_dual,
            "plan_messages": self.plan_messages,
            "price_messages": self.price_messages,
            "invariants": self.invariants,
        }


def project_box(lam, upper) -> np.ndarray:
    return np.minimum(np.maximum(lam, 0.0), upper)


def dual_update(state: DualState, aggregate_load, net_supply) -> np.ndarray:
    """Projected subgradient step on ``lambda``; advances the iteration counter."""
    grad = np.asarray(aggregate_load) - np.asarray(net_supply)
    state.lam = project_box(state.lam + state.step_size() * grad, state.upper)
    state.iteration += 1
    return state.lam


def running_average(history) -> np.ndarray:
    """Arithmetic mean of plan iterates, accumulated incrementally."""
    avg = None
    for n, d in enumerate(history, start=1):
        d = np.asarray(d, dtype=float)
        avg = d.copy() if avg is None else avg + (d - avg) / n
    if avg is None:
        raise ValueError("running average needs at least one iterate")
    return avg


def initial_step(first_gradient, upper) -> float:
    """Step so that the first update moves ``lambda`` by half the box width at the peak imbalance."""
    peak = float(np.max(np.abs(first_gradient), initial=0.0))
    width = float(np.max(upper, initial=0.0))
    return 0.5 * width / peak if peak > 1e-12 else 0.0


def subproblem_solve(block: ResidenceBlock, lam, pi_s, method: str = "auto"):
    """Best response of one residence to ``lambda``; returns ``(plan, value)``.

    ``value`` is ``(lambda - pi_s) @ load`` including the fixed history load.
    """
    w = np.asarray(lam) - np.asarray(pi_s)
    plan = solve_linear_plan(block.feasible, block.psi.decision.T @ w, method=method)
    return plan.levels, plan.value + float(w @ block.feasible.history_load)


def default_step(problem: SlotProblem, upper) -> float:
    """Box width over the largest row sum of the aggregate load operator."""
    psi_all = sp.hstack([b.psi.decision for b in problem.blocks], format="csr")
    norm = float(np.max(np.asarray(abs(psi_all).sum(axis=1)).ravel(), initial=0.0))
    width = float(np.max(upper, initial=0.0))
    return width / norm if norm > 0 else 1.0


class ResidenceAgent:
    """Holds one residence's private data; talks to the center only via the bus."""

    def __init__(self, residence_id: int, block: ResidenceBlock, pi_s):
        self.residence_id = residence_id
        self.block = block
        self.pi_s = np.asarray(pi_s)

    def respond(self, bus) -> float:
        price = bus.receive_price(self.residence_id)
        plan, value = subproblem_solve(self.block, price.prices, self.pi_s)
        bus.send_plan(PlanMessage(self.residence_id, price.iteration, plan))
        return value


def run_algorithm2(problem: SlotProblem, config: DualConfig | None = None,
                   lambda0=None, reference: float | None = None) -> DualResult:
    """Dual decomposition with running-average primal recovery.

    ``reference`` is an optional centralized optimum used only to check
    weak duality when ``config.check_invariants`` is set.
    """
    config = config or DualConfig()
    upper = problem.pi_p + problem.pi_s
    if np.any(upper < 0):
        raise ValueError("pi_p + pi_s must be nonnegative")
    M = len(problem.blocks)
    bus = make_bus(config.bus)
    agents = [ResidenceAgent(m, b, problem.pi_s) for m, b in enumerate(problem.blocks)]
    lam0 = problem.pi_s if lambda0 is None else lambda0
    if config.step_rule not in ("subgradient", "operator"):
        raise ValueError(f"unknown step rule {config.step_rule!r}")
    state = DualState(project_box(np.asarray(lam0, dtype=float), upper), upper,
                      config.step_scale * default_step(problem, upper))
    hist = np.sum([b.feasible.history_load for b in problem.blocks], axis=0)
    dual_trace, primal_trace, best_trace = [], [], []
    inv = {"box": True, "weak_duality": True, "average_feasible": True, "message_count": True,
           "worst_weak_duality_excess": -np.inf, "worst_average_violation": 0.0}
    avg = None
    status = "iteration-limit"
    bus.broadcast(PriceMessage(0, state.lam))

    for n in range(config.max_iter):
        sent_before = bus.sent_plans
        for agent in agents:
            agent.respond(bus)
        msgs = sorted(bus.receive_plans(M), key=lambda msg: msg.residence_id)
        if [msg.iteration for msg in msgs] != [n] * M or [msg.residence_id for msg in msgs] != list(range(M)):
            raise RuntimeError(f"barrier mismatch at iteration {n}")
        plans = [msg.plan for msg in msgs]
        agg = hist + np.sum([b.psi.decision @ d for b, d in zip(problem.blocks, plans)], axis=0)
        dual_value = float((state.lam - problem.pi_s) @ (agg - problem.net_supply))

        avg = [d.copy() for d in plans] if avg is None else [a + (d - a) / (n + 1) for a, d in zip(avg, plans)]
        primal_value = problem.objective(avg)
        dual_trace.append(dual_value)
        primal_trace.append(primal_value)
        best_trace.append(max(dual_value, best_trace[-1]) if best_trace else dual_value)

        if config.check_invariants:
            if bus.sent_plans - sent_before != M:
                inv["message_count"] = False
            if reference is not None:
                excess = dual_value - reference
                inv["worst_weak_duality_excess"] = max(inv["worst_weak_duality_excess"], excess)
                if excess > 1e-6:
                    inv["weak_duality"] = False
            worst = max(max(b.feasible.violations(a).values()) for b, a in zip(problem.blocks, avg))
            inv["worst_average_violation"] = max(inv["worst_average_violation"], worst)
            if not all(b.feasible.contains(a) for b, a in zip(problem.blocks, avg)):
                inv["average_feasible"] = False

        if n == 0 and config.step_rule == "subgradient":
            step = initial_step(agg - problem.net_supply, upper)
            if step > 0:
                state.step0 = config.step_scale * step
        dual_update(state, agg, problem.net_supply)
        if config.check_invariants and (np.any(state.lam < 0) or np.any(state.lam > upper)):
            inv["box"] = False
        bus.broadcast(PriceMessage(state.iteration, state.lam))

        if config.gap_tol is not None:
            gap = primal_value - best_trace[-1]
            if gap <= config.gap_tol * abs(primal_value) + config.gap_abs:
                status = "converged"
                break
            continue
        w = config.window
        if n >= w:
            gain = best_trace[-1] - best_trace[-1 - w]
            if gain <= config.rel_tol * max(1.0, abs(best_trace[-1])):
                status = "converged"
                break

    state.average = avg
    if bus.sent_prices != len(dual_trace) + 1:
        inv["message_count"] = False
    return DualResult(
        plans=avg,
        lam=state.lam.copy(),
        iterations=len(dual_trace),
        status=status,
        objective=problem.objective(avg),
        best_dual=best_trace[-1],
        dual_trace=dual_trace,
        primal_trace=primal_trace,
        plan_messages=bus.sent_plans,
        price_messages=bus.sent_prices,
        invariants=inv,
    )

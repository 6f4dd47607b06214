"""Retailer and customer metrics computed from load trajectories."""

from __future__ import annotations

import numpy as np


def rt_cost(supply, load, pi_p, pi_s) -> float:
    """Real-time balancing cost of the retailer.

    Deficits ``load > supply`` are bought at ``pi_p``; surpluses are
    absorbed at ``pi_s`` (negative ``pi_s`` means the surplus is sold).
    """
    supply = np.asarray(supply, dtype=float)
    load = np.asarray(load, dtype=float)
    if supply.shape != load.shape:
        raise ValueError(f"supply shape {supply.shape} != load shape {load.shape}")
    pi_p = np.broadcast_to(np.asarray(pi_p, dtype=float), supply.shape)
    pi_s = np.broadcast_to(np.asarray(pi_s, dtype=float), supply.shape)
    return float(pi_s @ np.maximum(supply - load, 0.0) + pi_p @ np.maximum(load - supply, 0.0))


def deviation_metric(supply, load) -> float:
    supply = np.asarray(supply, dtype=float)
    load = np.asarray(load, dtype=float)
    if supply.shape != load.shape:
        raise ValueError(f"supply shape {supply.shape} != load shape {load.shape}")
    return float(np.abs(supply - load).sum())


def customer_bill(prices, loads):
    """Bill ``sum_l p(l) * load(l)``; ``loads`` may be ``(L,)`` or ``(M, L)``."""
    loads = np.asarray(loads, dtype=float)
    prices = np.asarray(prices, dtype=float)
    if loads.shape[-1] != prices.shape[-1]:
        raise ValueError("price and load horizons differ")
    out = loads @ prices
    return float(out) if out.ndim == 0 else out


def mode_metrics(residence_loads, supply, prices, pi_p, pi_s, charged_bills=None,
                 cost_da: float = 0.0) -> dict:
    """All scalar metrics of one mode from its per-residence loads.

    ``charged_bills`` defaults to the physical bills; coordinated modes
    pass the individual-HEMS bills instead.
    """
    residence_loads = np.asarray(residence_loads, dtype=float)
    agg = residence_loads.sum(axis=0)
    bills = customer_bill(prices, residence_loads)
    charged = bills if charged_bills is None else np.asarray(charged_bills, dtype=float)
    cost = rt_cost(supply, agg, pi_p, pi_s)
    revenue = float(charged.sum())
    return {
        "rt_cost": cost,
        "deviation": deviation_metric(supply, agg),
        "bills": bills.tolist(),
        "charged_bills": charged.tolist(),
        "revenue": revenue,
        "profit": revenue - cost - float(cost_da),
        "peak_load": float(agg.max()),
        "total_energy": float(agg.sum()),
    }

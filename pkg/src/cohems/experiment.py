"""Experiment orchestration: run scheduling modes on one scenario and persist results.

Every mode of one experiment sees the same scenario object; its digest
is stored in the report. The report carries its own inputs (supply,
prices and per-residence loads), so :func:`recompute_report` can rebuild
it from the persisted file alone.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cec import CecConfig, ScheduleResult, default_supply, run_cec, run_individual_hems, run_unscheduled
from .dual import DualConfig
from .metrics import mode_metrics
from .scenario import PriceSeries, Scenario, day_ahead_price

log = logging.getLogger(__name__)

MODES = ("unscheduled", "individual", "coordinated-central", "coordinated-distributed")
COORDINATED = ("coordinated-central", "coordinated-distributed")

# imbalance prices of the two reference examples
EXAMPLES = {
    "example1": {"pi_p": 1.0, "pi_s": 1.0},
    "example2": {"pi_p": 1.0, "pi_s": -0.5},
}


@dataclass
class ExperimentConfig:
    """What to run and under which prices.

    ``pi_p``/``pi_s`` are scalars or per-slot lists. ``day_ahead`` and
    ``supply`` default to the bundled price curve and the mean
    unscheduled load.
    """

    mode: str | list = "compare-all"     # one mode, a list of modes, or compare-all
    pi_p: float | list = 1.0
    pi_s: float | list = 1.0
    day_ahead: list | None = None
    supply: list | None = None
    cost_da: float = 0.0
    lp_method: str = "auto"
    dual: DualConfig = field(default_factory=DualConfig)
    reference_check: bool = False

    def __post_init__(self):
        for m in ([self.mode] if isinstance(self.mode, str) else self.mode):
            if m != "compare-all" and m not in MODES:
                raise ValueError(f"unknown mode {m!r}; expected one of {MODES + ('compare-all',)}")
        if isinstance(self.dual, dict):
            self.dual = DualConfig(**self.dual)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        preset = data.pop("example", None)
        if preset is not None:
            if preset not in EXAMPLES:
                raise ValueError(f"unknown example preset {preset!r}")
            data = {**EXAMPLES[preset], **data}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def modes(self) -> tuple:
        if self.mode == "compare-all":
            return MODES
        return (self.mode,) if isinstance(self.mode, str) else tuple(self.mode)

    def prices(self, horizon: int) -> PriceSeries:
        p = day_ahead_price(horizon) if self.day_ahead is None else np.asarray(self.day_ahead, dtype=float)
        if p.size != horizon:
            raise ValueError(f"day-ahead price has {p.size} slots, scenario has {horizon}")
        return PriceSeries(p, self.pi_p, self.pi_s)


@dataclass
class MetricsReport:
    scenario_digest: str
    seed: int | None
    supply: np.ndarray
    prices: PriceSeries
    cost_da: float
    modes: dict                      # mode -> metrics dict
    residence_loads: dict            # mode -> (M, L)
    orderings: dict = field(default_factory=dict)
    ratios: dict = field(default_factory=dict)

    def aggregate(self, mode: str) -> np.ndarray:
        return np.asarray(self.residence_loads[mode]).sum(axis=0)

    def to_dict(self) -> dict:
        return {
            "scenario_digest": self.scenario_digest,
            "seed": self.seed,
            "cost_da": self.cost_da,
            "supply": self.supply.tolist(),
            "prices": {
                "day_ahead": self.prices.day_ahead.tolist(),
                "pi_p": self.prices.pi_p.tolist(),
                "pi_s": self.prices.pi_s.tolist(),
            },
            "modes": self.modes,
            "orderings": self.orderings,
            "ratios": self.ratios,
            "trajectories": {m: np.asarray(v).tolist() for m, v in self.residence_loads.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def trajectories_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.residence_loads)
        w.writerow(["slot", "supply"] + names)
        aggs = [self.aggregate(m) for m in names]
        for k in range(self.supply.size):
            w.writerow([k + 1, repr(float(self.supply[k]))] + [repr(float(a[k])) for a in aggs])
        return buf.getvalue()


def _orderings(modes: dict) -> tuple:
    orderings, ratios = {}, {}
    for key in ("deviation", "rt_cost"):
        orderings[key] = sorted(modes, key=lambda m: (modes[m][key], m))
        base = modes.get("unscheduled", {}).get(key)
        if base:
            ratios[key] = {m: modes[m][key] / base for m in modes}
    return orderings, ratios


def build_report(scenario_digest: str, seed, supply, prices: PriceSeries, residence_loads: dict,
                 cost_da: float = 0.0) -> MetricsReport:
    """Metrics for every mode in ``residence_loads``.

    Coordinated modes are charged the individual-HEMS bills when the
    individual mode is present.
    """
    supply = np.asarray(supply, dtype=float)
    hems_bills = None
    if "individual" in residence_loads:
        hems_bills = np.asarray(residence_loads["individual"]) @ prices.day_ahead
    modes = {}
    for mode, loads in residence_loads.items():
        charged = hems_bills if mode in COORDINATED else None
        modes[mode] = mode_metrics(loads, supply, prices.day_ahead, prices.pi_p, prices.pi_s,
                                   charged_bills=charged, cost_da=cost_da)
    report = MetricsReport(scenario_digest, seed, supply, prices, float(cost_da), modes,
                           {m: np.asarray(v, dtype=float) for m, v in residence_loads.items()})
    if len(modes) > 1:
        report.orderings, report.ratios = _orderings(modes)
    return report


def recompute_report(data: dict) -> MetricsReport:
    """Rebuild a report from its persisted dictionary form."""
    pr = data["prices"]
    prices = PriceSeries(pr["day_ahead"], pr["pi_p"], pr["pi_s"])
    return build_report(data["scenario_digest"], data["seed"], data["supply"], prices,
                        data["trajectories"], data["cost_da"])


def run_mode(scenario: Scenario, mode: str, config: ExperimentConfig, supply, prices: PriceSeries) -> ScheduleResult:
    if mode == "unscheduled":
        return run_unscheduled(scenario)
    if mode == "individual":
        return run_individual_hems(scenario, prices.day_ahead, lp_method=config.lp_method)
    prices.check_coordinated()
    solver = "centralized" if mode == "coordinated-central" else "distributed"
    cec = CecConfig(prices.pi_p, prices.pi_s, supply, solver=solver, lp_method=config.lp_method,
                    dual=config.dual, reference_check=config.reference_check)
    return run_cec(scenario, cec)


@dataclass
class ExperimentResult:
    report: MetricsReport
    schedules: dict

    @property
    def convergence(self) -> dict:
        return {m: r.convergence for m, r in self.schedules.items() if r.convergence}


def run_experiment(scenario: Scenario, config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run the configured modes on ``scenario``; optionally persist to ``out_dir``.

    A failure in any mode propagates before anything is written.
    """
    L = scenario.horizon
    prices = config.prices(L)
    supply = default_supply(scenario) if config.supply is None else np.asarray(config.supply, dtype=float)
    if supply.size != L:
        raise ValueError(f"supply has {supply.size} slots, scenario has {L}")
    modes = list(config.modes)
    if any(m in COORDINATED for m in modes) and "individual" not in modes:
        # the charged bills of coordinated modes come from the individual schedules
        modes.insert(0, "individual")
    schedules = {}
    for mode in modes:
        log.info("running %s on scenario seed %s", mode, scenario.seed)
        schedules[mode] = run_mode(scenario, mode, config, supply, prices)
    report = build_report(scenario.digest(), scenario.seed, supply, prices,
                          {m: r.residence_loads for m, r in schedules.items()}, config.cost_da)
    result = ExperimentResult(report, schedules)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def write_outputs(result: ExperimentResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectories.csv").write_text(result.report.trajectories_csv())
    (out / "metrics.json").write_text(result.report.to_json())
    conv = result.convergence
    if conv:
        (out / "convergence.json").write_text(json.dumps(_jsonable(conv), indent=1, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj

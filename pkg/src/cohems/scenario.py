"""Scenario configuration and random instance generation.

Default appliance energy-per-slot ranges are 3.25-7.5 kWh (phev),
1.2-1.5 kWh (dishwasher) and 0.3-0.5 kWh (dryer).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .appliance import (
    ApplianceSpec,
    ArrivalProcess,
    LoadProfile,
    Residence,
    unscheduled_injection,
)


@dataclass
class RequestWindow:
    """One request with ``probability`` placed uniformly in ``[start, end)`` wall-clock."""

    probability: float
    start: str
    end: str


@dataclass
class ApplianceConfig:
    name: str
    energy: tuple          # uniform range, kWh per slot
    duration: tuple        # uniform integer range, slots
    max_delay: tuple       # uniform integer range, slots
    windows: list = field(default_factory=list)


def default_appliances() -> list:
    return [
        ApplianceConfig("phev", (3.25, 7.5), (16, 32), (4, 16),
                        [RequestWindow(0.8, "20:00", "24:00"), RequestWindow(0.3, "08:00", "12:00")]),
        ApplianceConfig("dishwasher", (1.2, 1.5), (2, 4), (4, 12),
                        [RequestWindow(0.8, "06:00", "10:00"), RequestWindow(0.8, "12:00", "14:00"),
                         RequestWindow(0.8, "17:00", "19:00")]),
        ApplianceConfig("dryer", (0.3, 0.5), (4, 12), (4, 12),
                        [RequestWindow(0.8, "14:00", "15:00"), RequestWindow(1.0, "20:00", "22:00")]),
    ]


@dataclass
class ScenarioConfig:
    residences: int = 60
    horizon: int = 96
    slot_minutes: int = 15
    start_time: str = "20:00"
    uncontrollable_load: float = 5.0
    p_max: float = 10.0
    appliances: list = field(default_factory=default_appliances)

    @property
    def n_appliances(self) -> int:
        return len(self.appliances)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        if "appliances" in data:
            apps = []
            for a in data["appliances"]:
                a = dict(a)
                a["windows"] = [w if isinstance(w, RequestWindow) else RequestWindow(**w)
                                for w in a.get("windows", [])]
                for key in ("energy", "duration", "max_delay"):
                    a[key] = tuple(a[key])
                apps.append(ApplianceConfig(**a))
            data["appliances"] = apps
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        return cls(**data)

    def window_slots(self, window: RequestWindow) -> tuple:
        """Inclusive slot range ``(first, last)`` covered by ``window``."""
        first = self.clock_to_slot(window.start)
        offset_end = (_minutes(window.end) - _minutes(self.start_time)) % 1440
        if offset_end == 0:
            offset_end = 1440
        last = offset_end // self.slot_minutes
        if last < first:
            raise ValueError(f"window {window.start}-{window.end} wraps past the horizon start")
        return first, last

    def clock_to_slot(self, clock: str) -> int:
        offset = (_minutes(clock) - _minutes(self.start_time)) % 1440
        return offset // self.slot_minutes + 1


def _minutes(clock: str) -> int:
    h, m = clock.split(":")
    return int(h) * 60 + int(m)


def window_rates(config: ScenarioConfig, app: ApplianceConfig) -> np.ndarray:
    """Per-slot request rates implied by an appliance's request windows.

    Raises if two windows share a slot, which would allow two requests
    for the same appliance in one slot.
    """
    L = config.horizon
    rates = np.zeros(L)
    used = np.zeros(L, dtype=bool)
    for w in app.windows:
        if not 0.0 <= w.probability <= 1.0:
            raise ValueError(f"window probability {w.probability} outside [0, 1]")
        first, last = config.window_slots(w)
        if first < 1 or last > L:
            raise ValueError(f"window {w.start}-{w.end} of {app.name} outside the horizon")
        if np.any(used[first - 1:last]):
            raise ValueError(f"overlapping request windows for {app.name}")
        used[first - 1:last] = True
        rates[first - 1:last] = w.probability / (last - first + 1)
    return rates


@dataclass
class Scenario:
    """A sampled instance: residences, their arrival realisations and rates."""

    residences: list
    arrivals: np.ndarray     # (M, N, L) int cumulative counts
    rates: np.ndarray        # (M, N, L)
    seed: int | None = None

    @property
    def n_residences(self) -> int:
        return len(self.residences)

    @property
    def n_appliances(self) -> int:
        return self.arrivals.shape[1]

    @property
    def horizon(self) -> int:
        return self.arrivals.shape[2]

    def arrival_process(self, m: int, i: int) -> ArrivalProcess:
        return ArrivalProcess(self.arrivals[m, i], self.rates[m, i])

    def uncontrollable_total(self) -> np.ndarray:
        return np.sum([r.uncontrollable_load for r in self.residences], axis=0)

    def to_dict(self) -> dict:
        res = []
        for r in self.residences:
            res.append({
                "p_max": r.p_max,
                "uncontrollable_load": r.uncontrollable_load.tolist(),
                "appliances": [
                    {"name": name, "profile": a.profile.energy_per_slot.tolist(), "max_delay": a.max_delay}
                    for name, a in zip(r.appliance_names or [""] * len(r.appliances), r.appliances)
                ],
            })
        return {
            "seed": self.seed,
            "residences": res,
            "arrivals": self.arrivals.tolist(),
            "rates": self.rates.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        residences = []
        for r in data["residences"]:
            apps = tuple(ApplianceSpec(LoadProfile(a["profile"]), a["max_delay"]) for a in r["appliances"])
            names = tuple(a.get("name", "") for a in r["appliances"])
            residences.append(Residence(apps, np.asarray(r["uncontrollable_load"]), r["p_max"], names))
        return cls(residences, np.asarray(data["arrivals"], dtype=np.int64),
                   np.asarray(data["rates"], dtype=float), data.get("seed"))

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def generate_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Sample appliance parameters and one arrival realisation per request window."""
    rng = np.random.default_rng(seed)
    L, M, N = config.horizon, config.residences, config.n_appliances
    base_rates = [window_rates(config, app) for app in config.appliances]
    windows = [[config.window_slots(w) for w in app.windows] for app in config.appliances]
    residences = []
    arrivals = np.zeros((M, N, L), dtype=np.int64)
    rates = np.zeros((M, N, L))
    for m in range(M):
        specs = []
        for i, app in enumerate(config.appliances):
            energy = rng.uniform(*app.energy)
            duration = int(rng.integers(app.duration[0], app.duration[1] + 1))
            delay = int(rng.integers(app.max_delay[0], app.max_delay[1] + 1))
            specs.append(ApplianceSpec(LoadProfile.rectangular(energy, duration), delay))
            inc = np.zeros(L, dtype=np.int64)
            for w, (first, last) in zip(app.windows, windows[i]):
                hit = rng.random() < w.probability
                when = int(rng.integers(first, last + 1))
                if hit:
                    inc[when - 1] = 1
            arrivals[m, i] = np.cumsum(inc)
            rates[m, i] = base_rates[i]
        residences.append(Residence(
            tuple(specs), np.full(L, config.uncontrollable_load), config.p_max,
            tuple(a.name for a in config.appliances)))
    return Scenario(residences, arrivals, rates, seed)


def expected_unscheduled_load(scenario: Scenario) -> np.ndarray:
    """Mean aggregate load if every request were served on arrival."""
    total = scenario.uncontrollable_total().astype(float)
    for m, res in enumerate(scenario.residences):
        for i, app in enumerate(res.appliances):
            total += unscheduled_injection(app.profile, np.cumsum(scenario.rates[m, i]))
    return total


def realized_unscheduled_load(scenario: Scenario) -> np.ndarray:
    """Per-residence total load with immediate launches, shape ``(M, L)``."""
    out = np.zeros((scenario.n_residences, scenario.horizon))
    for m, res in enumerate(scenario.residences):
        out[m] = res.uncontrollable_load
        for i, app in enumerate(res.appliances):
            out[m] += unscheduled_injection(app.profile, scenario.arrivals[m, i])
    return out


# --- price and supply series -------------------------------------------------

@dataclass
class PriceSeries:
    """Day-ahead retail price ``p`` and real-time imbalance prices."""

    day_ahead: np.ndarray
    pi_p: np.ndarray
    pi_s: np.ndarray

    def __post_init__(self):
        self.day_ahead = np.asarray(self.day_ahead, dtype=float)
        L = self.day_ahead.size
        self.pi_p = np.broadcast_to(np.asarray(self.pi_p, dtype=float), (L,)).copy()
        self.pi_s = np.broadcast_to(np.asarray(self.pi_s, dtype=float), (L,)).copy()

    @property
    def horizon(self) -> int:
        return self.day_ahead.size

    def check_coordinated(self):
        if np.any(self.pi_p + self.pi_s < 0):
            raise ValueError("coordinated scheduling needs pi_p + pi_s >= 0 in every slot")


def read_series_csv(path) -> np.ndarray:
    """Read a ``slot,value`` CSV with one row per slot starting at slot 1."""
    rows = Path(path).read_text().strip().splitlines()
    if not rows or rows[0].replace(" ", "").lower() != "slot,value":
        raise ValueError(f"{path}: expected header 'slot,value'")
    slots, values = [], []
    for line in rows[1:]:
        if not line.strip():
            continue
        s, v = line.split(",")
        slots.append(int(s))
        values.append(float(v))
    if slots != list(range(1, len(slots) + 1)):
        raise ValueError(f"{path}: slots must run 1..L without gaps")
    return np.asarray(values)


def write_series_csv(path, values) -> None:
    lines = ["slot,value"] + [f"{k},{float(v)!r}" for k, v in enumerate(values, start=1)]
    Path(path).write_text("\n".join(lines) + "\n")


def synthetic_day_ahead_price() -> np.ndarray:
    """Bundled 96-slot day-ahead curve starting at 20:00."""
    ref = resources.files("cohems") / "data" / "day_ahead_price.csv"
    with resources.as_file(ref) as p:
        return read_series_csv(p)


def day_ahead_price(horizon: int) -> np.ndarray:
    p = synthetic_day_ahead_price()
    if horizon == p.size:
        return p
    # resample the bundled day onto a different number of slots
    x_src = (np.arange(p.size) + 0.5) / p.size
    x_dst = (np.arange(horizon) + 0.5) / horizon
    return np.interp(x_dst, x_src, p)

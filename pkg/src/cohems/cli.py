"""Command line entry point.

::

    cohems generate --config cfg.json --seed 3 --out runs/s3
    cohems run --mode compare-all --scenario runs/s3
    cohems compare --config cfg.json --seeds 10 --out runs/sweep

The config file is JSON with two optional sections, ``scenario``
(fields of :class:`ScenarioConfig`) and ``experiment`` (fields of
:class:`ExperimentConfig`, plus ``example: example1|example2``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .experiment import MODES, ExperimentConfig, run_experiment
from .scenario import Scenario, ScenarioConfig, generate_scenario, read_series_csv

log = logging.getLogger("cohems")

SCENARIO_FILE = "scenario.json"
CONFIG_FILE = "config.json"


def load_config(path) -> tuple:
    data = {} if path is None else json.loads(Path(path).read_text())
    unknown = set(data) - {"scenario", "experiment"}
    if unknown:
        raise ValueError(f"{path}: unknown sections {sorted(unknown)}")
    return ScenarioConfig.from_dict(data.get("scenario", {})), data.get("experiment", {})


def _experiment(exp: dict, args, mode=None) -> ExperimentConfig:
    exp = dict(exp)
    if mode is not None:
        exp["mode"] = mode
    if args.prices:
        exp["day_ahead"] = read_series_csv(args.prices).tolist()
    if args.supply:
        exp["supply"] = read_series_csv(args.supply).tolist()
    if args.example:
        exp["example"] = args.example
    return ExperimentConfig.from_dict(exp)


def _summary_rows(report) -> list:
    rows = []
    for mode, m in report.modes.items():
        rows.append({"seed": report.seed, "mode": mode, "deviation": m["deviation"],
                     "rt_cost": m["rt_cost"], "revenue": m["revenue"], "profit": m["profit"],
                     "peak_load": m["peak_load"]})
    return rows


def _emit(rows: list, fmt: str, stream):
    if fmt == "json":
        json.dump(rows, stream, indent=1)
        stream.write("\n")
        return
    if not rows:
        return
    w = csv.DictWriter(stream, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def cmd_generate(args) -> int:
    scfg, exp = load_config(args.config)
    scenario = generate_scenario(scfg, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / SCENARIO_FILE).write_text(json.dumps(scenario.to_dict(), sort_keys=True) + "\n")
    (out / CONFIG_FILE).write_text(json.dumps({"scenario": scfg.to_dict(), "experiment": exp},
                                              indent=1, sort_keys=True) + "\n")
    print(f"wrote {out / SCENARIO_FILE} (digest {scenario.digest()[:12]})")
    return 0


def cmd_run(args) -> int:
    sdir = Path(args.scenario)
    scenario = Scenario.from_dict(json.loads((sdir / SCENARIO_FILE).read_text()))
    cfg_path = args.config or (sdir / CONFIG_FILE if (sdir / CONFIG_FILE).exists() else None)
    _, exp = load_config(cfg_path)
    config = _experiment(exp, args, mode=args.mode)
    result = run_experiment(scenario, config, out_dir=args.out or sdir)
    _emit(_summary_rows(result.report), args.format, sys.stdout)
    return 0


def cmd_compare(args) -> int:
    scfg, exp = load_config(args.config)
    config = _experiment(exp, args, mode="compare-all" if args.mode is None else args.mode)
    out = Path(args.out) if args.out else None
    rows = []
    for seed in range(args.first_seed, args.first_seed + args.seeds):
        scenario = generate_scenario(scfg, seed)
        out_dir = None if out is None else out / f"seed{seed}"
        result = run_experiment(scenario, config, out_dir=out_dir)
        rows += _summary_rows(result.report)
    if out is not None:
        buf = io.StringIO()
        _emit(rows, "csv", buf)
        (out / "summary.csv").write_text(buf.getvalue())
    _emit(rows, args.format, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cohems", description="Coordinated residential load scheduling")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a scenario and store it")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)

    def common(sp):
        sp.add_argument("--prices", help="day-ahead price CSV (slot,value)")
        sp.add_argument("--supply", help="supply CSV (slot,value)")
        sp.add_argument("--example", choices=["example1", "example2"], help="imbalance price preset")
        sp.add_argument("--format", choices=["csv", "json"], default="csv", help="summary format on stdout")

    r = sub.add_parser("run", help="run one mode (or compare-all) on a stored scenario")
    r.add_argument("--mode", required=True, choices=MODES + ("compare-all",))
    r.add_argument("--scenario", required=True, help="directory written by 'generate'")
    r.add_argument("--config", help="JSON config file (default: the one stored with the scenario)")
    r.add_argument("--out", help="output directory (default: the scenario directory)")
    common(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="compare all modes over several seeds")
    c.add_argument("--config", help="JSON config file")
    c.add_argument("--seeds", type=int, required=True, help="number of seeds")
    c.add_argument("--first-seed", type=int, default=1)
    c.add_argument("--mode", choices=MODES + ("compare-all",))
    c.add_argument("--out", help="directory for per-seed outputs and summary.csv")
    common(c)
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands:

* ``track``  -- run a closed-loop tracking scenario from a TOML config
* ``map``    -- run a survey/mapping scenario from a TOML config
* ``solve``  -- minimum-energy routing for a single JSON instance
* ``oracle`` -- exhaustive reference solve of the same instance (small only)
* ``sweep``  -- rerun a scenario across several bandwidths and compare

Exit codes: 0 success, 2 infeasible problem, 1 error (bad config, bad
instance, unexpected failure).  The default output directory is taken from
the ``AGGROUTE_OUT`` environment variable when ``--out`` is absent.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from aggroute.config import parse_config, parse_params, parse_rate
from aggroute.errors import ConfigError, Infeasible
from aggroute.params import FleetGeometry
from aggroute.results import emit_chart, write_results
from aggroute.sim import run_sim, normalized_energy_series
from aggroute.solver import GridSpec, Plan, SolveReport, brute_force_oracle, solve_routing

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _out_dir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get("AGGROUTE_OUT")
    if env:
        return Path(env)
    return Path("out")


def _apply_overrides(config, args):
    updates = {}
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "grid", None) is not None:
        headings, _, speeds = args.grid.partition("x")
        try:
            updates["grid"] = GridSpec(heading_count=int(headings),
                                       speed_count=int(speeds))
        except ValueError as exc:
            raise ConfigError(f"--grid expects HEADINGSxSPEEDS, got {args.grid!r}") from exc
    return dataclasses.replace(config, **updates) if updates else config


def _run_scenario(args, expected_kind: str) -> int:
    config = _apply_overrides(parse_config(args.config), args)
    if config.kind != expected_kind:
        raise ConfigError(
            f"config is kind {config.kind!r}; this subcommand runs {expected_kind!r}")
    records = run_sim(config)
    out = _out_dir(args)
    paths = write_results(records, out, config)
    _, summary = normalized_energy_series(records)
    print(f"{config.kind}: {len(records)} rounds "
          f"(mean normalized energy: "
          f"{'n/a' if summary['mean'] is None else format(summary['mean'], '.4f')})")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return EXIT_OK


def _load_instance(path: str | Path) -> tuple[FleetGeometry, np.ndarray, object]:
    """Instance JSON: positions, sink, optional source, sensor_assignment, params."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read instance {path}: {exc}") from exc
    for key in ("positions", "sink", "sensor_assignment", "params"):
        if key not in doc:
            raise ConfigError(f"instance is missing key '{key}'")
    params = parse_params(doc["params"], where="instance params")
    positions = np.asarray(doc["positions"], dtype=float)
    if positions.shape != (params.uav_count, 2):
        raise ConfigError("positions must be a uav_count x 2 list of meters")
    assignment = np.asarray(doc["sensor_assignment"], dtype=bool)
    if assignment.shape != (params.uav_count, params.type_count):
        raise ConfigError("sensor_assignment must be uav_count x type_count of 0/1")
    source = doc.get("source")
    geometry = FleetGeometry(
        positions=positions,
        sink_position=np.asarray(doc["sink"], dtype=float),
        source_position=None if source is None else np.asarray(source, dtype=float))
    return geometry, assignment, params


def _plan_to_dict(plan: Plan) -> dict:
    return {
        "objective_j": plan.objective,
        "links": [[int(i), int(j), int(z)] for i, j, z in plan.topology.active_links()],
        "aggregators": plan.topology.aggregators.astype(int).tolist(),
        "per_node_j": [
            {"sensing": b.sensing, "processing": b.processing,
             "receiving": b.receiving, "transmitting": b.transmitting,
             "total": b.total}
            for b in plan.per_node],
    }


def _run_instance(args, solve, compare: bool = False) -> int:
    geometry, assignment, params = _load_instance(args.instance)
    report: SolveReport = solve(geometry, assignment, params)
    doc = {
        "feasible": report.feasible,
        "reason": report.reason,
        "nodes_expanded": report.nodes_expanded,
        "plan": _plan_to_dict(report.plan) if report.plan is not None else None,
    }
    if compare:
        check = solve_routing(geometry, assignment, params)
        doc["solver_objective"] = (None if check.plan is None
                                   else check.plan.objective)
        doc["objectives_match"] = bool(
            report.feasible == check.feasible
            and (report.plan is None
                 or abs(report.plan.objective - check.plan.objective)
                 <= 1e-9 * max(1.0, abs(report.plan.objective))))
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out is not None:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.feasible else EXIT_INFEASIBLE


def _run_sweep(args) -> int:
    if args.param != "B":
        raise ConfigError(f"only bandwidth sweeps are supported (--param B), "
                          f"got {args.param!r}")
    config = _apply_overrides(parse_config(args.config), args)
    bandwidths = [parse_rate(raw) for raw in args.values]
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)

    chart_series: dict[str, list[tuple[float, float]]] = {}
    table = []
    for raw, bps in zip(args.values, bandwidths):
        run_config = dataclasses.replace(
            config, params=dataclasses.replace(config.params, bandwidth_bps=bps))
        records = run_sim(run_config)
        series, summary = normalized_energy_series(records)
        chart_series[raw] = series
        table.append({"bandwidth": raw, "bandwidth_bps": bps, **summary})
        print(f"{raw}: {len(records)} rounds, mean normalized "
              f"{'n/a' if summary['mean'] is None else format(summary['mean'], '.4f')}")

    (out / "sweep.json").write_text(
        json.dumps(table, indent=2, sort_keys=True) + "\n")
    (out / "sweep.svg").write_text(emit_chart(
        chart_series, title="Normalized energy vs bandwidth",
        x_label="round", y_label="optimal / baseline"))
    print(f"  sweep: {out / 'sweep.json'}")
    print(f"  chart: {out / 'sweep.svg'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggroute",
        description="Energy-minimal multi-UAV data routing scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (("track", "run a target-tracking scenario"),
                       ("map", "run an area-mapping scenario")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("config", help="TOML scenario file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--grid", default=None,
                         help="control grid as HEADINGSxSPEEDS, e.g. 16x3")

    for name, text in (("solve", "solve one routing instance"),
                       ("oracle", "exhaustive reference solve (small instances)")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("instance", help="JSON instance file")
        cmd.add_argument("--out", default=None, help="output JSON file")

    cmd = sub.add_parser("sweep", help="rerun a scenario over a parameter range")
    cmd.add_argument("config", help="TOML scenario file")
    cmd.add_argument("--param", required=True,
                     help="parameter to sweep (currently only B, the bandwidth)")
    cmd.add_argument("--values", nargs="+", required=True,
                     metavar="RATE", help="e.g. 4Kbps 5Kbps 7Kbps")
    cmd.add_argument("--seed", type=int, default=None)
    cmd.add_argument("--out", default=None, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "track":
            return _run_scenario(args, "tracking")
        if args.command == "map":
            return _run_scenario(args, "mapping")
        if args.command == "solve":
            return _run_instance(args, solve_routing)
        if args.command == "oracle":
            return _run_instance(args, brute_force_oracle, compare=True)
        return _run_sweep(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()

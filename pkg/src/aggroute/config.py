"""Scenario configuration files (TOML) and their canonical writer.

All units are documented next to each key: meters, m/s, seconds, joules per
bit, packets per decision interval, bits per second.  Bandwidth accepts
either a plain number in bits/s or a string with a ``bps``/``Kbps``/``Mbps``/
``Gbps`` suffix (decimal prefixes, K = 1000).

Unknown keys are rejected; only the control grid, the minimum link rate, and
the seed have defaults.
"""

from __future__ import annotations

import math
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from aggroute.errors import ConfigError
from aggroute.mapping import GuidanceParams, Region
from aggroute.params import ScenarioParams
from aggroute.sim import SimConfig
from aggroute.solver import GridSpec

_RATE_SUFFIXES = {"kbps": 1e3, "mbps": 1e6, "gbps": 1e9, "bps": 1.0}

_TOP_KEYS = {"schema_version", "kind", "seed", "horizon", "initial_energy_j",
             "sink", "fleet", "grid", "target", "region", "params"}
_FLEET_KEYS = {"positions"}
_GRID_KEYS = {"headings", "speeds"}
_TARGET_KEYS = {"position", "velocity", "min_info"}
_REGION_KEYS = {"length_m", "width_m", "origin", "overlap",
                "transition_boundary_m", "entry_angle_rad", "cruise_speed_mps"}
_PARAM_KEYS = {"uav_count", "type_count", "sense_rate", "packet_bits",
               "aggregation_ratio", "bandwidth", "interval_s",
               "sense_energy_j_per_bit", "process_energy_j_per_bit",
               "receive_energy_j_per_bit", "transmit_energy_j_per_bit",
               "amp_energy_j_per_bit", "path_loss", "comm_range_m",
               "sensing_range_m", "safety_range_m", "speed_min_mps",
               "speed_max_mps", "min_link_rate", "sensors_per_type"}


def parse_rate(value) -> float:
    """Bandwidth value: number in bits/s or string like ``"7Kbps"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        for suffix, factor in _RATE_SUFFIXES.items():
            if text.endswith(suffix):
                number = text[: -len(suffix)].strip()
                try:
                    return float(number) * factor
                except ValueError:
                    break
    raise ConfigError(
        f"bandwidth {value!r} is not a number in bits/s or a 'Kbps'/'Mbps' string")


def _reject_unknown(table: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _need(table: dict, key: str, where: str, unit: str):
    if key not in table:
        raise ConfigError(f"missing key '{key}' in {where} (expected {unit})")
    return table[key]


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{key}' must be a number, got {value!r}")
    return float(value)


def _point(value, key: str) -> tuple[float, float]:
    if not (isinstance(value, list) and len(value) == 2):
        raise ConfigError(f"key '{key}' must be a [x, y] pair in meters")
    return (_number(value[0], key), _number(value[1], key))


def _float_list(value, key: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"key '{key}' must be a non-empty list of numbers")
    return tuple(_number(v, key) for v in value)


def parse_params(table: dict, where: str = "[params]") -> ScenarioParams:
    _reject_unknown(table, _PARAM_KEYS, where)
    kwargs = dict(
        uav_count=int(_need(table, "uav_count", where, "integer count")),
        type_count=int(_need(table, "type_count", where, "integer count")),
        sense_rate=_float_list(_need(table, "sense_rate", where,
                                     "packets/interval per type"), "sense_rate"),
        packet_bits=_number(_need(table, "packet_bits", where, "bits"), "packet_bits"),
        aggregation_ratio=_float_list(
            _need(table, "aggregation_ratio", where, "ratio in [0,1] per type"),
            "aggregation_ratio"),
        bandwidth_bps=parse_rate(_need(table, "bandwidth", where, "bits/s")),
        interval_s=_number(_need(table, "interval_s", where, "seconds"), "interval_s"),
        sense_energy=_number(_need(table, "sense_energy_j_per_bit", where, "J/bit"),
                             "sense_energy_j_per_bit"),
        process_energy=_number(_need(table, "process_energy_j_per_bit", where, "J/bit"),
                               "process_energy_j_per_bit"),
        receive_energy=_number(_need(table, "receive_energy_j_per_bit", where, "J/bit"),
                               "receive_energy_j_per_bit"),
        transmit_energy=_number(_need(table, "transmit_energy_j_per_bit", where, "J/bit"),
                                "transmit_energy_j_per_bit"),
        amp_energy=_number(_need(table, "amp_energy_j_per_bit", where,
                                 "J/bit/m^path_loss"), "amp_energy_j_per_bit"),
        path_loss=_number(_need(table, "path_loss", where, "exponent >= 2"), "path_loss"),
        comm_range=_number(_need(table, "comm_range_m", where, "meters"), "comm_range_m"),
        sensing_range=_number(_need(table, "sensing_range_m", where, "meters"),
                              "sensing_range_m"),
        safety_range=_number(_need(table, "safety_range_m", where, "meters"),
                             "safety_range_m"),
        speed_min=_number(_need(table, "speed_min_mps", where, "m/s"), "speed_min_mps"),
        speed_max=_number(_need(table, "speed_max_mps", where, "m/s"), "speed_max_mps"),
    )
    if "min_link_rate" in table:
        kwargs["min_link_rate"] = _number(table["min_link_rate"], "min_link_rate")
    if "sensors_per_type" in table:
        kwargs["sensors_per_type"] = tuple(
            int(v) for v in table["sensors_per_type"])
    try:
        return ScenarioParams(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid {where}: {exc}") from exc


def parse_config_text(text: str, where: str = "<config>") -> SimConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{where}: not valid TOML: {exc}") from exc
    return parse_config_dict(doc, where)


def parse_config_dict(doc: dict, where: str = "<config>") -> SimConfig:
    _reject_unknown(doc, _TOP_KEYS, where)
    version = _need(doc, "schema_version", where, "integer, currently 1")
    if version != 1:
        raise ConfigError(f"unsupported schema_version {version}")
    kind = _need(doc, "kind", where, "'tracking' or 'mapping'")
    params = parse_params(_need(doc, "params", where, "parameter table"))

    grid = GridSpec()
    if "grid" in doc:
        _reject_unknown(doc["grid"], _GRID_KEYS, "[grid]")
        grid = GridSpec(
            heading_count=int(doc["grid"].get("headings", 16)),
            speed_count=int(doc["grid"].get("speeds", 3)))

    positions = None
    if "fleet" in doc:
        _reject_unknown(doc["fleet"], _FLEET_KEYS, "[fleet]")
        raw = _need(doc["fleet"], "positions", "[fleet]", "list of [x, y] meters")
        positions = tuple(_point(p, "fleet.positions") for p in raw)
        if len(positions) != params.uav_count:
            raise ConfigError("fleet.positions length must equal params.uav_count")

    min_info = target_position = target_velocity = None
    if kind == "tracking":
        target = _need(doc, "target", where, "table with position/velocity/min_info")
        _reject_unknown(target, _TARGET_KEYS, "[target]")
        target_position = _point(_need(target, "position", "[target]", "meters"),
                                 "target.position")
        target_velocity = _point(_need(target, "velocity", "[target]", "m/s"),
                                 "target.velocity")
        min_info = _number(_need(target, "min_info", "[target]",
                                 "information threshold"), "target.min_info")
        if positions is None:
            raise ConfigError("tracking config requires [fleet] positions")
        if "region" in doc:
            raise ConfigError("[region] is only valid for kind = 'mapping'")

    region = overlap = guidance = None
    if kind == "mapping":
        table = _need(doc, "region", where, "table with region geometry")
        _reject_unknown(table, _REGION_KEYS, "[region]")
        origin = _point(table.get("origin", [0.0, 0.0]), "region.origin")
        region = Region(
            length=_number(_need(table, "length_m", "[region]", "meters"), "length_m"),
            width=_number(_need(table, "width_m", "[region]", "meters"), "width_m"),
            origin=origin)
        overlap = _number(_need(table, "overlap", "[region]", "factor in (0,1]"),
                          "overlap")
        guidance = GuidanceParams(
            transition_boundary=_number(
                _need(table, "transition_boundary_m", "[region]", "meters"),
                "transition_boundary_m"),
            entry_angle=_number(
                _need(table, "entry_angle_rad", "[region]", "radians"),
                "entry_angle_rad"),
            cruise_speed=_number(
                _need(table, "cruise_speed_mps", "[region]", "m/s"),
                "cruise_speed_mps"))
        if "target" in doc:
            raise ConfigError("[target] is only valid for kind = 'tracking'")

    try:
        return SimConfig(
            kind=kind,
            params=params,
            sink=_point(_need(doc, "sink", where, "meters"), "sink"),
            horizon=int(_need(doc, "horizon", where, "rounds")),
            initial_energy=_number(
                _need(doc, "initial_energy_j", where, "joules"), "initial_energy_j"),
            seed=int(doc.get("seed", 0)),
            positions=positions,
            grid=grid,
            min_info=min_info,
            target_position=target_position,
            target_velocity=target_velocity,
            region=region,
            overlap=overlap,
            guidance=guidance,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(path: str | Path) -> SimConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    return parse_config_text(path.read_text(), where=str(path))


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def write_config(config: SimConfig) -> str:
    """Canonical TOML text; parse_config_text of the result is identity."""
    p = config.params
    lines = [
        f"schema_version = {config.schema_version}",
        f'kind = "{config.kind}"',
        f"seed = {config.seed}",
        f"horizon = {config.horizon}",
        f"initial_energy_j = {_toml_value(float(config.initial_energy))}",
        f"sink = {_toml_value([float(v) for v in config.sink])}",
        "",
    ]
    if config.positions is not None:
        lines += ["[fleet]",
                  "positions = " + _toml_value(
                      [[float(a), float(b)] for a, b in config.positions]),
                  ""]
    lines += ["[grid]",
              f"headings = {config.grid.heading_count}",
              f"speeds = {config.grid.speed_count}",
              ""]
    if config.kind == "tracking":
        lines += ["[target]",
                  "position = " + _toml_value([float(v) for v in config.target_position]),
                  "velocity = " + _toml_value([float(v) for v in config.target_velocity]),
                  f"min_info = {_toml_value(float(config.min_info))}",
                  ""]
    else:
        lines += ["[region]",
                  f"length_m = {_toml_value(float(config.region.length))}",
                  f"width_m = {_toml_value(float(config.region.width))}",
                  "origin = " + _toml_value([float(v) for v in config.region.origin]),
                  f"overlap = {_toml_value(float(config.overlap))}",
                  f"transition_boundary_m = {_toml_value(float(config.guidance.transition_boundary))}",
                  f"entry_angle_rad = {_toml_value(float(config.guidance.entry_angle))}",
                  f"cruise_speed_mps = {_toml_value(float(config.guidance.cruise_speed))}",
                  ""]
    lines += ["[params]",
              f"uav_count = {p.uav_count}",
              f"type_count = {p.type_count}",
              "sense_rate = " + _toml_value(list(p.sense_rate)),
              f"packet_bits = {_toml_value(float(p.packet_bits))}",
              "aggregation_ratio = " + _toml_value(list(p.aggregation_ratio)),
              f"bandwidth = {_toml_value(float(p.bandwidth_bps))}",
              f"interval_s = {_toml_value(float(p.interval_s))}",
              f"sense_energy_j_per_bit = {_toml_value(float(p.sense_energy))}",
              f"process_energy_j_per_bit = {_toml_value(float(p.process_energy))}",
              f"receive_energy_j_per_bit = {_toml_value(float(p.receive_energy))}",
              f"transmit_energy_j_per_bit = {_toml_value(float(p.transmit_energy))}",
              f"amp_energy_j_per_bit = {_toml_value(float(p.amp_energy))}",
              f"path_loss = {_toml_value(float(p.path_loss))}",
              f"comm_range_m = {_toml_value(float(p.comm_range))}",
              f"sensing_range_m = {_toml_value(float(p.sensing_range))}",
              f"safety_range_m = {_toml_value(float(p.safety_range))}",
              f"speed_min_mps = {_toml_value(float(p.speed_min))}",
              f"speed_max_mps = {_toml_value(float(p.speed_max))}",
              f"min_link_rate = {_toml_value(float(p.min_link_rate))}",
              ]
    if p.sensors_per_type is not None:
        lines.append("sensors_per_type = " + _toml_value(list(p.sensors_per_type)))
    return "\n".join(lines) + "\n"

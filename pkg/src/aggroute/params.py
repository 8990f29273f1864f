"""Scenario constants and fleet geometry.

Node indexing convention used throughout the package: node 0 is the data
source (target or area of interest), nodes 1..n are the UAVs, node n+1 is
the base station (sink).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ScenarioParams:
    """Physical, energy, and protocol constants for one scenario.

    Energies are in joules per bit, ranges in meters, speeds in m/s, rates
    in packets per decision interval, bandwidth in bits per second.
    """

    uav_count: int
    type_count: int
    sense_rate: tuple[float, ...]          # packets/interval, one per type
    packet_bits: float
    aggregation_ratio: tuple[float, ...]   # output/input packets after fusion
    bandwidth_bps: float
    interval_s: float
    sense_energy: float                    # J/bit
    process_energy: float                  # J/bit
    receive_energy: float                  # J/bit
    transmit_energy: float                 # J/bit, distance-independent part
    amp_energy: float                      # J/bit/m^path_loss
    path_loss: float
    comm_range: float
    sensing_range: float
    safety_range: float
    speed_min: float
    speed_max: float
    min_link_rate: float = 1e-3            # smallest rate an active link may carry
    sensors_per_type: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.uav_count < 1:
            raise ValueError("need at least one UAV")
        if self.type_count < 1:
            raise ValueError("need at least one data type")
        if len(self.sense_rate) != self.type_count:
            raise ValueError("sense_rate length must equal type_count")
        if len(self.aggregation_ratio) != self.type_count:
            raise ValueError("aggregation_ratio length must equal type_count")
        for name in ("sense_energy", "process_energy", "receive_energy",
                     "transmit_energy", "amp_energy"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for g in self.aggregation_ratio:
            if not 0.0 <= g <= 1.0:
                raise ValueError("aggregation ratio must lie in [0, 1]")
        if self.path_loss < 2:
            raise ValueError("path loss exponent must be >= 2")
        if not 0 < self.speed_min <= self.speed_max:
            raise ValueError("require 0 < speed_min <= speed_max")
        if not self.safety_range < self.comm_range:
            raise ValueError("safety range must be below comm range")
        if not 0 < self.min_link_rate < min(self.sense_rate):
            raise ValueError("min_link_rate must be positive and below every sense rate")
        if self.sensors_per_type is not None and len(self.sensors_per_type) != self.type_count:
            raise ValueError("sensors_per_type length must equal type_count")

    @property
    def sink(self) -> int:
        return self.uav_count + 1

    @property
    def bits_per_interval(self) -> float:
        return self.bandwidth_bps * self.interval_s

    def flow_cap(self, z: int, sensor_count: int) -> float:
        """Upper bound on any single link's rate for data type z."""
        cap_count = sensor_count
        if self.sensors_per_type is not None:
            cap_count = self.sensors_per_type[z]
        return cap_count * self.sense_rate[z]


@dataclass(frozen=True)
class FleetGeometry:
    """Planar positions of the fleet, the data source, and the sink."""

    positions: np.ndarray                  # (n, 2) UAV positions, meters
    sink_position: np.ndarray              # (2,)
    source_position: np.ndarray | None = None  # (2,), None when no point source

    def __post_init__(self) -> None:
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float))
        object.__setattr__(self, "sink_position", np.asarray(self.sink_position, dtype=float))
        if self.source_position is not None:
            object.__setattr__(
                self, "source_position", np.asarray(self.source_position, dtype=float))
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("UAV positions must be finite")
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ValueError("positions must have shape (n, 2)")

    @property
    def uav_count(self) -> int:
        return self.positions.shape[0]

    def node_position(self, node: int) -> np.ndarray:
        n = self.uav_count
        if node == 0:
            if self.source_position is None:
                raise ValueError("geometry has no point source position")
            return self.source_position
        if node == n + 1:
            return self.sink_position
        return self.positions[node - 1]

    def node_distance(self, a: int, b: int) -> float:
        return float(math.dist(self.node_position(a), self.node_position(b)))

"""Per-node energy terms and the per-round energy state update.

All terms are joules over one decision interval.  The sink is never
energy-accounted; only UAVs 1..n spend energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from aggroute.errors import DepletionError
from aggroute.network import FlowAssignment, Topology
from aggroute.params import FleetGeometry, ScenarioParams


@dataclass(frozen=True)
class EnergyBreakdown:
    sensing: float
    processing: float
    receiving: float
    transmitting: float

    @property
    def total(self) -> float:
        return self.sensing + self.processing + self.receiving + self.transmitting


def sensing_energy(topology: Topology, params: ScenarioParams, node: int) -> float:
    """Energy to sense the node's assigned streams for one interval."""
    total_packets = 0.0
    for z in range(params.type_count):
        if topology.links[0, node, z]:
            total_packets += params.sense_rate[z]
    return params.sense_energy * params.packet_bits * total_packets


def processing_energy(topology: Topology, flows: FlowAssignment,
                      params: ScenarioParams, node: int) -> float:
    """Aggregation energy; a node processes a type only when it fuses it.

    Own sensed packets are included in the processed volume, gated by the
    aggregator flag exactly like received packets.
    """
    n = params.uav_count
    packets = 0.0
    for z in range(params.type_count):
        if topology.aggregators[node - 1, z]:
            own = params.sense_rate[z] if topology.links[0, node, z] else 0.0
            packets += own + flows.rates[1 : n + 1, node, z].sum()
    return params.process_energy * params.packet_bits * packets


def receiving_energy(flows: FlowAssignment, topology: Topology,
                     params: ScenarioParams, node: int) -> float:
    """Radio receive energy; sensing in-links cost nothing here."""
    n = params.uav_count
    packets = flows.rates[1 : n + 1, node, :].sum()
    return params.receive_energy * params.packet_bits * float(packets)


def transmitting_energy(flows: FlowAssignment, topology: Topology,
                        geometry: FleetGeometry, params: ScenarioParams,
                        node: int) -> float:
    """Radio transmit energy with distance-dependent amplifier cost."""
    n = params.uav_count
    total = 0.0
    for z in range(params.type_count):
        for j in range(1, n + 2):
            rate = flows.rates[node, j, z]
            if rate > 0:
                d = geometry.node_distance(node, j)
                per_bit = params.transmit_energy + params.amp_energy * d ** params.path_loss
                total += per_bit * rate * params.packet_bits
    return total


def node_breakdown(topology: Topology, flows: FlowAssignment,
                   geometry: FleetGeometry, params: ScenarioParams,
                   node: int) -> EnergyBreakdown:
    return EnergyBreakdown(
        sensing=sensing_energy(topology, params, node),
        processing=processing_energy(topology, flows, params, node),
        receiving=receiving_energy(flows, topology, params, node),
        transmitting=transmitting_energy(flows, topology, geometry, params, node),
    )


def fleet_breakdowns(topology: Topology, flows: FlowAssignment,
                     geometry: FleetGeometry,
                     params: ScenarioParams) -> list[EnergyBreakdown]:
    return [node_breakdown(topology, flows, geometry, params, i)
            for i in range(1, params.uav_count + 1)]


def apply_energy_update(state: np.ndarray, totals: np.ndarray) -> np.ndarray:
    """Subtract per-node spend from the stored energy; reject depletion.

    Raises DepletionError naming the first node whose budget would go
    negative.
    """
    state = np.asarray(state, dtype=float)
    totals = np.asarray(totals, dtype=float)
    remaining = state - totals
    for idx, value in enumerate(remaining):
        if value < 0:
            raise DepletionError(node=idx + 1, deficit=-float(value))
    return remaining

"""Link topology, aggregator roles, flow propagation, and the constraint checks.

The routing state for one decision interval is a boolean link tensor
``links[i, j, z]`` (node i sends data of type z to node j).  Because every
UAV may keep at most one outgoing link per type, each per-type link graph is
a functional forest and the packet rates on all links follow deterministically
from the topology.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from aggroute.errors import Infeasible
from aggroute.params import FleetGeometry, ScenarioParams


@dataclass(frozen=True)
class Violation:
    """One failed structural or geometric constraint."""

    constraint: str
    node: int
    peer: int | None = None
    data_type: int | None = None

    def __str__(self) -> str:
        parts = [self.constraint, f"node={self.node}"]
        if self.peer is not None:
            parts.append(f"peer={self.peer}")
        if self.data_type is not None:
            parts.append(f"type={self.data_type}")
        return " ".join(parts)


@dataclass(frozen=True)
class Topology:
    """Boolean link tensor plus the aggregator flags it implies.

    ``links`` has shape (n+2, n+2, m); ``aggregators`` has shape (n, m) and
    row i-1 describes UAV i.
    """

    links: np.ndarray
    aggregators: np.ndarray

    def __post_init__(self) -> None:
        links = np.asarray(self.links, dtype=bool)
        links.setflags(write=False)
        object.__setattr__(self, "links", links)
        agg = np.asarray(self.aggregators, dtype=bool)
        agg.setflags(write=False)
        object.__setattr__(self, "aggregators", agg)

    @property
    def uav_count(self) -> int:
        return self.links.shape[0] - 2

    @property
    def type_count(self) -> int:
        return self.links.shape[2]

    def active_links(self) -> list[tuple[int, int, int]]:
        """Sorted (i, j, z) triples with an active link."""
        return sorted(zip(*(idx.tolist() for idx in np.nonzero(self.links))))


def make_topology(links: np.ndarray) -> Topology:
    """Build a Topology, deriving the aggregator flags from the links."""
    links = np.asarray(links, dtype=bool)
    return Topology(links=links, aggregators=derive_aggregators_from_links(links))


def derive_aggregators_from_links(links: np.ndarray) -> np.ndarray:
    """A UAV aggregates type z when more than one z-stream feeds it.

    The sensing in-link from the source counts toward the in-degree: a node
    fusing its own sensed stream with one received stream is an aggregator.
    """
    n = links.shape[0] - 2
    indegree = links[: n + 1, 1 : n + 1, :].sum(axis=0)  # in-links from source + UAVs
    return indegree > 1


def derive_aggregators(topology: Topology) -> np.ndarray:
    return derive_aggregators_from_links(topology.links)


@dataclass(frozen=True)
class FlowAssignment:
    """Per-link packet rates, shape (n+2, n+2, m), packets per interval."""

    rates: np.ndarray

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        rates.setflags(write=False)
        object.__setattr__(self, "rates", rates)


def validate_link_structure(topology: Topology, params: ScenarioParams) -> list[Violation]:
    """Check the structural link constraints; empty list means all hold.

    Checks, per data type: at least one sensing link, at least one link into
    the sink, at most one outgoing link per UAV, and no self links.
    """
    n, m = params.uav_count, params.type_count
    links = topology.links
    if links.shape != (n + 2, n + 2, m):
        raise ValueError(
            f"link tensor shape {links.shape} does not match scenario "
            f"({n + 2}, {n + 2}, {m})")

    out: list[Violation] = []
    for z in range(m):
        if links[0, 1 : n + 1, z].sum() < 1:
            out.append(Violation("no-sensor-for-type", node=0, data_type=z))
        if links[1 : n + 1, n + 1, z].sum() < 1:
            out.append(Violation("no-sink-link-for-type", node=n + 1, data_type=z))
        for i in range(1, n + 1):
            if links[i, 1 : n + 2, z].sum() > 1:
                out.append(Violation("multiple-out-links", node=i, data_type=z))
    for i in range(n + 2):
        for z in range(m):
            if links[i, i, z]:
                out.append(Violation("self-link", node=i, peer=i, data_type=z))
    return out


def propagate_flows(topology: Topology, params: ScenarioParams) -> FlowAssignment:
    """Derive the unique packet rates implied by a valid topology.

    Per type, nodes are processed in topological order of the link graph;
    a node's outgoing rate is its inflow scaled by the aggregation ratio
    when the node aggregates.  Raises Infeasible for cycles, for inflow
    that has no outgoing link, and for active links whose rate would fall
    below the minimum link rate or exceed the per-type cap.
    """
    n, m = params.uav_count, params.type_count
    links = topology.links
    agg = topology.aggregators
    rates = np.zeros((n + 2, n + 2, m))

    for z in range(m):
        if links[1 : n + 2, 0, z].any():
            raise Infeasible(f"type {z}: link into the source node")
        rate_z = params.sense_rate[z]
        gamma = params.aggregation_ratio[z]
        cap = params.flow_cap(z, int(links[0, 1 : n + 1, z].sum()))
        rates[0, 1 : n + 1, z] = rate_z * links[0, 1 : n + 1, z]

        out_of: dict[int, int] = {}
        indeg = {i: 0 for i in range(1, n + 1)}
        for i in range(1, n + 1):
            targets = np.nonzero(links[i, 1 : n + 2, z])[0]
            if targets.size > 1:
                raise Infeasible(f"type {z}: node {i} has multiple out-links")
            if targets.size == 1:
                out_of[i] = int(targets[0]) + 1
        for i, j in out_of.items():
            if j <= n:
                indeg[j] += 1

        ready = deque(i for i in range(1, n + 1) if indeg[i] == 0)
        seen = 0
        while ready:
            i = ready.popleft()
            seen += 1
            inflow = rates[0, i, z] + rates[1 : n + 1, i, z].sum()
            target = out_of.get(i)
            if inflow > 0:
                if target is None:
                    raise Infeasible(
                        f"type {z}: node {i} receives flow but has no out-link")
                outflow = inflow * (1.0 + (gamma - 1.0) * agg[i - 1, z])
                if outflow < params.min_link_rate:
                    raise Infeasible(
                        f"type {z}: rate on link {i}->{target} below minimum")
                if outflow > cap * (1 + 1e-12):
                    raise Infeasible(
                        f"type {z}: rate on link {i}->{target} exceeds cap")
                rates[i, target, z] = outflow
            elif target is not None:
                # Active link with zero flow cannot satisfy the coupling bound.
                raise Infeasible(f"type {z}: active link {i}->{target} carries no flow")
            if target is not None and target <= n:
                indeg[target] -= 1
                if indeg[target] == 0:
                    ready.append(target)
        if seen < n:
            stuck = [i for i in range(1, n + 1) if indeg[i] > 0]
            raise Infeasible(f"type {z}: cycle through nodes {stuck}")

    return FlowAssignment(rates=rates)


@dataclass(frozen=True)
class NodeLoad:
    """Channel occupancy of one UAV over the decision interval."""

    node: int
    load_bits: float
    limit_bits: float

    @property
    def ok(self) -> bool:
        return self.load_bits <= self.limit_bits


def check_bandwidth(topology: Topology, flows: FlowAssignment,
                    params: ScenarioParams) -> list[NodeLoad]:
    """Per-UAV channel load: transmitted bits plus bits received from UAVs.

    Sensing in-links from the source do not occupy the radio channel and are
    excluded from the received sum.
    """
    n = params.uav_count
    L = params.packet_bits
    limit = params.bits_per_interval
    loads = []
    for i in range(1, n + 1):
        sent = flows.rates[i, 1 : n + 2, :].sum()
        received = flows.rates[1 : n + 1, i, :].sum()
        loads.append(NodeLoad(node=i, load_bits=L * (sent + received), limit_bits=limit))
    return loads


def check_geometry(geometry: FleetGeometry, topology: Topology,
                   params: ScenarioParams,
                   require_motion_constraints: bool = True) -> list[Violation]:
    """Flag pairwise range violations and out-of-range sensing links.

    Pairwise comm-range / safety-distance checks apply only when motion
    constraints are required (target tracking); sensing-range checks apply
    whenever the geometry has a point source, using squared distances.
    """
    n = params.uav_count
    out: list[Violation] = []
    if require_motion_constraints:
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                d = geometry.node_distance(i, j)
                if d >= params.comm_range:
                    out.append(Violation("comm-range", node=i, peer=j))
                if d < params.safety_range:
                    out.append(Violation("safety-distance", node=i, peer=j))
    if geometry.source_position is not None:
        r2 = params.sensing_range ** 2
        for z in range(params.type_count):
            for j in range(1, n + 1):
                if topology.links[0, j, z]:
                    dx = geometry.node_position(j) - geometry.source_position
                    if float(dx @ dx) > r2:
                        out.append(Violation("sensing-range", node=j, data_type=z))
    return out

"""Exact minimization of fleet energy over routing topologies and controls.

Because each UAV keeps at most one outgoing link per data type, the per-type
link graphs are functional forests and every feasible topology determines its
packet rates uniquely.  Energy and all constraints except the shared-channel
bandwidth limit separate by data type, so routing is solved by enumerating
valid per-type forests and searching their combinations:

* ``solve_routing``     -- depth-first search over types with lower-bound
                           pruning (the production path),
* ``brute_force_oracle``-- exhaustive evaluation of every combination with no
                           pruning (the certification path, small fleets only),
* ``solve_tracking_step``-- the routing search embedded in a discretized
                           speed/heading grid with sensing-range and
                           information-contribution constraints.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from aggroute import energy as energy_mod
from aggroute.errors import Infeasible
from aggroute.network import (FlowAssignment, Topology, make_topology,
                              propagate_flows)
from aggroute.params import FleetGeometry, ScenarioParams
from aggroute.tracking import SensorModel, log_information_weights


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the continuous control space."""

    heading_count: int = 16
    speed_count: int = 3

    def headings(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.heading_count) / self.heading_count

    def speeds(self, params: ScenarioParams) -> np.ndarray:
        if self.speed_count == 1:
            return np.array([params.speed_min])
        return np.linspace(params.speed_min, params.speed_max, self.speed_count)


@dataclass(frozen=True)
class Controls:
    speeds: np.ndarray   # (n,) m/s
    headings: np.ndarray  # (n,) rad


@dataclass(frozen=True)
class Plan:
    """A feasible routing decision, fully accounted."""

    topology: Topology
    flows: FlowAssignment
    geometry: FleetGeometry
    per_node: list[energy_mod.EnergyBreakdown]
    objective: float
    controls: Controls | None = None

    def totals(self) -> np.ndarray:
        return np.array([b.total for b in self.per_node])


@dataclass(frozen=True)
class SolveReport:
    plan: Plan | None
    reason: str | None
    nodes_expanded: int
    candidates_pruned: int
    wall_time: float

    @property
    def feasible(self) -> bool:
        return self.plan is not None


@dataclass(frozen=True)
class _TypeStructure:
    """One valid per-type forest with its topology-determined rates.

    Geometry-independent: transmit energy is attached later, once positions
    are known.
    """

    out_map: tuple[int, ...]                     # 0 = no out-link, else target
    links: tuple[tuple[int, int], ...]           # active (i, j) UAV/sink links
    agg: tuple[bool, ...]
    link_rates: tuple[tuple[int, int, float], ...]
    static_energy: tuple[float, ...]             # per UAV: sense+process+receive
    loads: tuple[float, ...]                     # per UAV channel bits


def enumerate_type_structures(sensors: tuple[bool, ...], z: int,
                              params: ScenarioParams) -> list[_TypeStructure]:
    """All valid single-type forests for a fixed sensing assignment.

    A node participates iff it has an out-link; participants must route all
    flow to the sink acyclically, non-sensing participants need at least one
    incoming link (pure relays with no traffic are not allowed), and every
    active link's rate must respect the minimum-rate/cap bounds.
    """
    n = params.uav_count
    sink = n + 1
    rate_z = params.sense_rate[z]
    gamma = params.aggregation_ratio[z]
    L = params.packet_bits
    sensor_ids = [i for i in range(1, n + 1) if sensors[i - 1]]
    if not sensor_ids:
        return []
    cap = params.flow_cap(z, len(sensor_ids))

    options = [
        [0] + [j for j in range(1, n + 2) if j != i]
        for i in range(1, n + 1)
    ]
    out: list[_TypeStructure] = []
    for out_map in itertools.product(*options):
        carriers = {i for i in range(1, n + 1) if out_map[i - 1] != 0}
        if any(i not in carriers for i in sensor_ids):
            continue
        ok = True
        indeg = dict.fromkeys(range(1, n + 1), 0)
        for i in carriers:
            j = out_map[i - 1]
            if j != sink:
                if j not in carriers:
                    ok = False
                    break
                indeg[j] += 1
        if not ok:
            continue
        if any(i not in sensor_ids and indeg[i] == 0 for i in carriers):
            continue

        # Acyclicity: every carrier's pointer chain must terminate at the sink.
        state = {}
        for start in carriers:
            path = []
            i = start
            while i != sink and state.get(i) is None:
                state[i] = "open"
                path.append(i)
                i = out_map[i - 1]
            if i != sink and state.get(i) == "open":
                ok = False
                break
            for p in path:
                state[p] = "done"
        if not ok:
            continue

        # Topology-determined rates, processed leaves-first.
        inflow = {i: (rate_z if sensors[i - 1] else 0.0) for i in carriers}
        pending = dict(indeg)
        ready = [i for i in sorted(carriers) if pending[i] == 0]
        rates: list[tuple[int, int, float]] = []
        agg = [False] * n
        while ready and ok:
            i = ready.pop()
            total_in = (1 if sensors[i - 1] else 0) + indeg[i]
            agg[i - 1] = total_in > 1
            outflow = inflow[i] * (1.0 + (gamma - 1.0) * (1.0 if agg[i - 1] else 0.0))
            if not params.min_link_rate <= outflow <= cap * (1 + 1e-12):
                ok = False
                break
            j = out_map[i - 1]
            rates.append((i, j, outflow))
            if j != sink:
                inflow[j] += outflow
                pending[j] -= 1
                if pending[j] == 0:
                    ready.append(j)
        if not ok:
            continue

        static = [0.0] * n
        loads = [0.0] * n
        received = dict.fromkeys(carriers, 0.0)
        for i, j, r in rates:
            if j != sink:
                received[j] += r
        for i in carriers:
            own = rate_z if sensors[i - 1] else 0.0
            sense = params.sense_energy * L * own
            proc = params.process_energy * L * (own + received[i]) if agg[i - 1] else 0.0
            recv = params.receive_energy * L * received[i]
            static[i - 1] = sense + proc + recv
        for i, j, r in rates:
            loads[i - 1] += r * L
            if j != sink:
                loads[j - 1] += r * L

        out.append(_TypeStructure(
            out_map=out_map,
            links=tuple(sorted((i, out_map[i - 1]) for i in carriers)),
            agg=tuple(agg),
            link_rates=tuple(sorted(rates)),
            static_energy=tuple(static),
            loads=tuple(loads),
        ))
    return out


def _transmit_energy(structure: _TypeStructure, geometry: FleetGeometry,
                     params: ScenarioParams) -> np.ndarray:
    """Per-UAV transmit energy of one structure at fixed positions."""
    out = np.zeros(params.uav_count)
    for i, j, rate in structure.link_rates:
        d = geometry.node_distance(i, j)
        per_bit = params.transmit_energy + params.amp_energy * d ** params.path_loss
        out[i - 1] += per_bit * rate * params.packet_bits
    return out


@dataclass(frozen=True)
class _Candidate:
    structure: _TypeStructure
    energy: float
    loads: np.ndarray


def _type_candidates(geometry: FleetGeometry, sensors: tuple[bool, ...], z: int,
                     params: ScenarioParams, sort: bool) -> list[_Candidate]:
    cands = []
    for s in enumerate_type_structures(sensors, z, params):
        node_energy = np.array(s.static_energy) + _transmit_energy(s, geometry, params)
        cands.append(_Candidate(structure=s, energy=float(node_energy.sum()),
                                loads=np.array(s.loads)))
    if sort:
        cands.sort(key=lambda c: (c.energy, len(c.structure.links), c.structure.links))
    return cands


def _assemble_links(sensor_assignment: np.ndarray,
                    structures: list[_TypeStructure],
                    params: ScenarioParams) -> np.ndarray:
    n, m = params.uav_count, params.type_count
    links = np.zeros((n + 2, n + 2, m), dtype=bool)
    for z in range(m):
        links[0, 1 : n + 1, z] = sensor_assignment[:, z]
        for i, j in structures[z].links:
            links[i, j, z] = True
    return links


def _build_plan(geometry: FleetGeometry, sensor_assignment: np.ndarray,
                structures: list[_TypeStructure], params: ScenarioParams,
                controls: Controls | None = None) -> Plan:
    """Materialize a Plan, re-deriving flows and energies through the model
    layer rather than reusing the search's incremental numbers."""
    topology = make_topology(_assemble_links(sensor_assignment, structures, params))
    flows = propagate_flows(topology, params)
    per_node = energy_mod.fleet_breakdowns(topology, flows, geometry, params)
    return Plan(topology=topology, flows=flows, geometry=geometry,
                per_node=per_node, objective=sum(b.total for b in per_node),
                controls=controls)


def _plan_links_key(sensor_assignment: np.ndarray,
                    structures: list[_TypeStructure]) -> tuple:
    links = []
    for z, s in enumerate(structures):
        links.extend((0, i + 1, z) for i in np.nonzero(sensor_assignment[:, z])[0])
        links.extend((i, j, z) for i, j in s.links)
    links.sort()
    return (len(links), tuple(links))


def solve_routing(geometry: FleetGeometry, sensor_assignment: np.ndarray,
                  params: ScenarioParams) -> SolveReport:
    """Minimum-energy routing for fixed positions and sensing assignment.

    Exact: candidates are enumerated per data type and combined depth-first;
    a branch is pruned only when its committed energy plus the sum of the
    remaining types' minima already exceeds the incumbent, or when a partial
    channel load exceeds the bandwidth budget.  Ties break toward fewer
    active links, then lexicographically smallest link list.
    """
    t0 = time.perf_counter()
    sensor_assignment = np.asarray(sensor_assignment, dtype=bool)
    n, m = params.uav_count, params.type_count
    limit = params.bits_per_interval
    expanded = 0
    pruned = 0

    per_type: list[list[_Candidate]] = []
    for z in range(m):
        if not sensor_assignment[:, z].any():
            return SolveReport(None, f"type {z} has no sensor", 0, 0,
                               time.perf_counter() - t0)
        cands = _type_candidates(geometry, tuple(sensor_assignment[:, z]), z,
                                 params, sort=True)
        if not cands:
            return SolveReport(None, f"type {z} has no valid routing", 0, 0,
                               time.perf_counter() - t0)
        per_type.append(cands)

    suffix_min = [0.0] * (m + 1)
    for z in range(m - 1, -1, -1):
        suffix_min[z] = suffix_min[z + 1] + per_type[z][0].energy

    best_key: tuple | None = None
    best_combo: list[_TypeStructure] | None = None
    combo: list[_TypeStructure] = []

    def dfs(z: int, energy_acc: float, loads_acc: np.ndarray) -> None:
        nonlocal best_key, best_combo, expanded, pruned
        if z == m:
            key = (energy_acc,) + _plan_links_key(sensor_assignment, combo)
            if best_key is None or key < best_key:
                best_key = key
                best_combo = list(combo)
            return
        for rank, cand in enumerate(per_type[z]):
            expanded += 1
            bound = energy_acc + cand.energy + suffix_min[z + 1]
            if best_key is not None and bound > best_key[0]:
                pruned += len(per_type[z]) - rank
                break  # candidates are sorted by energy; the rest only grow
            loads = loads_acc + cand.loads
            if np.any(loads > limit):
                pruned += 1
                continue
            combo.append(cand.structure)
            dfs(z + 1, energy_acc + cand.energy, loads)
            combo.pop()

    dfs(0, 0.0, np.zeros(n))
    wall = time.perf_counter() - t0
    if best_combo is None:
        return SolveReport(None, "bandwidth budget excludes every topology",
                           expanded, pruned, wall)
    plan = _build_plan(geometry, sensor_assignment, best_combo, params)
    return SolveReport(plan, None, expanded, pruned, time.perf_counter() - t0)


_ORACLE_MAX_UAVS = 4
_ORACLE_MAX_TYPES = 2


def brute_force_oracle(geometry: FleetGeometry, sensor_assignment: np.ndarray,
                       params: ScenarioParams) -> SolveReport:
    """Exhaustive reference solver: no pruning, every combination evaluated.

    Certifies solve_routing on small instances; guarded to at most
    4 UAVs and 2 data types.
    """
    t0 = time.perf_counter()
    n, m = params.uav_count, params.type_count
    if n > _ORACLE_MAX_UAVS or m > _ORACLE_MAX_TYPES:
        raise ValueError("oracle restricted to <=4 UAVs and <=2 data types")
    sensor_assignment = np.asarray(sensor_assignment, dtype=bool)
    limit = params.bits_per_interval

    per_type = []
    for z in range(m):
        if not sensor_assignment[:, z].any():
            return SolveReport(None, f"type {z} has no sensor", 0, 0,
                               time.perf_counter() - t0)
        cands = _type_candidates(geometry, tuple(sensor_assignment[:, z]), z,
                                 params, sort=False)
        if not cands:
            return SolveReport(None, f"type {z} has no valid routing", 0, 0,
                               time.perf_counter() - t0)
        per_type.append(cands)

    best_key = None
    best_combo = None
    expanded = 0
    for combo in itertools.product(*per_type):
        expanded += 1
        loads = np.zeros(n)
        energy_acc = 0.0
        for cand in combo:
            loads += cand.loads
            energy_acc += cand.energy
        if np.any(loads > limit):
            continue
        structures = [c.structure for c in combo]
        key = (energy_acc,) + _plan_links_key(sensor_assignment, structures)
        if best_key is None or key < best_key:
            best_key = key
            best_combo = structures
    wall = time.perf_counter() - t0
    if best_combo is None:
        return SolveReport(None, "bandwidth budget excludes every topology",
                           expanded, 0, wall)
    plan = _build_plan(geometry, sensor_assignment, best_combo, params)
    return SolveReport(plan, None, expanded, 0, time.perf_counter() - t0)


def baseline_plan(geometry: FleetGeometry, sensor_assignment: np.ndarray,
                  params: ScenarioParams, check_feasibility: bool = True) -> Plan:
    """Every sensor transmits its own packets straight to the base station.

    No relays, no aggregation.  Raises Infeasible when a sensor is out of
    sensing range of the point source or a node's direct load exceeds the
    bandwidth budget; ``check_feasibility=False`` skips those checks and
    only accounts the energy of the forced single-hop plan.
    """
    sensor_assignment = np.asarray(sensor_assignment, dtype=bool)
    n, m = params.uav_count, params.type_count
    for z in range(m):
        if not sensor_assignment[:, z].any():
            raise Infeasible(f"type {z} has no sensor")
    if check_feasibility and geometry.source_position is not None:
        r2 = params.sensing_range ** 2
        for i in range(1, n + 1):
            if sensor_assignment[i - 1].any():
                delta = geometry.node_position(i) - geometry.source_position
                if float(delta @ delta) > r2:
                    raise Infeasible(f"sensor {i} beyond sensing range")
    if check_feasibility:
        limit = params.bits_per_interval
        for i in range(1, n + 1):
            load = sum(params.sense_rate[z] * params.packet_bits
                       for z in range(m) if sensor_assignment[i - 1, z])
            if load > limit:
                raise Infeasible(f"node {i} direct load {load:.0f} bits exceeds budget")

    links = np.zeros((n + 2, n + 2, m), dtype=bool)
    for z in range(m):
        links[0, 1 : n + 1, z] = sensor_assignment[:, z]
        links[1 : n + 1, n + 1, z] = sensor_assignment[:, z]
    topology = make_topology(links)
    flows = propagate_flows(topology, params)
    per_node = energy_mod.fleet_breakdowns(topology, flows, geometry, params)
    return Plan(topology=topology, flows=flows, geometry=geometry,
                per_node=per_node, objective=sum(b.total for b in per_node))


def _pairwise_distance_grid(candidate_positions: list[np.ndarray],
                            i: int, j: int) -> np.ndarray:
    delta = candidate_positions[i][:, None, :] - candidate_positions[j][None, :, :]
    return np.sqrt((delta ** 2).sum(axis=-1))


def solve_tracking_step(geometry: FleetGeometry, params: ScenarioParams,
                        grid: GridSpec, sensor_model: SensorModel,
                        min_info: float) -> SolveReport:
    """Joint choice of controls, sensor set, and routing for one interval.

    ``geometry.source_position`` must hold the predicted target position.
    The control grid is the Cartesian product of per-UAV (speed, heading)
    options; candidate plans are (sensor set, routing forest) patterns whose
    energy is evaluated over the whole grid at once.  Only single-stream
    scenarios are supported (the tracked target is one data type).

    Grid points violating pairwise comm-range/safety constraints, the
    sensing-range limit, or the minimum information contribution are masked
    out.  Ties break as in solve_routing, then toward the lowest flattened
    grid index (speed-major per UAV, C order across UAVs).
    """
    t0 = time.perf_counter()
    n = params.uav_count
    if params.type_count != 1:
        raise ValueError("tracking step supports a single data type")
    if geometry.source_position is None:
        raise ValueError("tracking geometry needs the predicted target position")
    sink = n + 1
    limit = params.bits_per_interval
    L = params.packet_bits
    beta = params.path_loss

    speeds = grid.speeds(params)
    headings = grid.headings()
    combos = [(v, psi) for v in speeds for psi in headings]
    n_opts = len(combos)
    disp = np.array([[v * params.interval_s * math.cos(psi),
                      v * params.interval_s * math.sin(psi)] for v, psi in combos])
    pos = [geometry.positions[i] + disp for i in range(n)]  # (n_opts, 2) each

    d_sink = [np.linalg.norm(pos[i] - geometry.sink_position, axis=1) for i in range(n)]
    d_target = [np.linalg.norm(pos[i] - geometry.source_position, axis=1)
                for i in range(n)]

    def along(arr: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * n
        shape[axis] = n_opts
        return arr.reshape(shape)

    geo_mask = np.ones((n_opts,) * n if n > 1 else (n_opts,), dtype=bool)
    pair_dist: dict[tuple[int, int], np.ndarray] = {}
    for i in range(n):
        for j in range(i + 1, n):
            dij = _pairwise_distance_grid(pos, i, j)
            pair_dist[(i, j)] = dij
            ok = (dij >= params.safety_range) & (dij < params.comm_range)
            shape = [1] * n
            shape[i] = n_opts
            shape[j] = n_opts
            geo_mask = geo_mask & ok.reshape(shape)

    # Information weight of a single sensor at distance d:
    #   offset - scale * path_loss * ln(d), from the log inverse noise.
    offset, scale = log_information_weights(sensor_model)
    d_floor = np.maximum(d_target, 1.0)
    info = [offset - scale * beta * np.log(d_floor[i]) for i in range(n)]
    in_range = [d_target[i] ** 2 <= params.sensing_range ** 2 for i in range(n)]

    best_key = None
    best: tuple | None = None
    expanded = 0
    pruned = 0
    structure_cache: dict[tuple[bool, ...], list[_TypeStructure]] = {}

    for bits in range(1, 1 << n):
        members = [i for i in range(n) if bits >> i & 1]
        sensors = tuple(i in members for i in range(n))
        set_mask = geo_mask.copy()
        pi_grid = np.zeros((1,) * n)
        for i in members:
            set_mask = set_mask & along(in_range[i], i)
            pi_grid = pi_grid + along(info[i], i)
        set_mask = set_mask & (pi_grid >= min_info)
        if not set_mask.any():
            pruned += 1
            continue
        if sensors not in structure_cache:
            structure_cache[sensors] = enumerate_type_structures(sensors, 0, params)

        for structure in structure_cache[sensors]:
            expanded += 1
            if any(load > limit for load in structure.loads):
                pruned += 1
                continue
            grid_energy = np.full((1,) * n, sum(structure.static_energy))
            for i, j, rate in structure.link_rates:
                w = rate * L
                if j == sink:
                    term = w * (params.transmit_energy
                                + params.amp_energy * d_sink[i - 1] ** beta)
                    grid_energy = grid_energy + along(term, i - 1)
                else:
                    a, b = i - 1, j - 1
                    dij = pair_dist[(a, b)] if a < b else pair_dist[(b, a)].T
                    term = w * (params.transmit_energy + params.amp_energy * dij ** beta)
                    shape = [1] * n
                    shape[a] = n_opts
                    shape[b] = n_opts
                    grid_energy = grid_energy + term.reshape(shape)
            masked = np.where(set_mask, grid_energy + np.zeros(set_mask.shape), np.inf)
            flat = int(np.argmin(masked))
            value = float(masked.reshape(-1)[flat])
            if not np.isfinite(value):
                continue
            key = ((value,) + _plan_links_key(
                np.array(sensors, dtype=bool).reshape(n, 1), [structure])
                + (flat,))
            if best_key is None or key < best_key:
                best_key = key
                best = (sensors, structure, flat)

    wall = time.perf_counter() - t0
    if best is None:
        return SolveReport(None, "no grid point satisfies the constraints",
                           expanded, pruned, wall)

    sensors, structure, flat = best
    opt_idx = np.unravel_index(flat, (n_opts,) * n)
    chosen_speeds = np.array([combos[o][0] for o in opt_idx])
    chosen_headings = np.array([combos[o][1] for o in opt_idx])
    new_positions = np.array([pos[i][opt_idx[i]] for i in range(n)])
    new_geometry = FleetGeometry(positions=new_positions,
                                 sink_position=geometry.sink_position,
                                 source_position=geometry.source_position)
    controls = Controls(speeds=chosen_speeds, headings=chosen_headings)
    plan = _build_plan(new_geometry,
                       np.array(sensors, dtype=bool).reshape(n, 1),
                       [structure], params, controls=controls)
    return SolveReport(plan, None, expanded, pruned, time.perf_counter() - t0)


def brute_force_tracking_step(geometry: FleetGeometry, params: ScenarioParams,
                              grid: GridSpec, sensor_model: SensorModel,
                              min_info: float) -> SolveReport:
    """Loop-over-grid reference for solve_tracking_step (tiny grids only)."""
    t0 = time.perf_counter()
    n = params.uav_count
    if params.type_count != 1:
        raise ValueError("tracking step supports a single data type")
    speeds = grid.speeds(params)
    headings = grid.headings()
    combos = [(v, psi) for v in speeds for psi in headings]
    n_opts = len(combos)
    offset, scale = log_information_weights(sensor_model)

    best_key = None
    best = None
    expanded = 0
    for flat, opt_idx in enumerate(itertools.product(range(n_opts), repeat=n)):
        new_positions = np.array([
            geometry.positions[i] + [
                combos[opt_idx[i]][0] * params.interval_s * math.cos(combos[opt_idx[i]][1]),
                combos[opt_idx[i]][0] * params.interval_s * math.sin(combos[opt_idx[i]][1]),
            ] for i in range(n)])
        ok = True
        for i in range(n):
            for j in range(i + 1, n):
                d = math.dist(new_positions[i], new_positions[j])
                if not params.safety_range <= d < params.comm_range:
                    ok = False
        if not ok:
            continue
        d_target = np.linalg.norm(new_positions - geometry.source_position, axis=1)
        in_range = d_target ** 2 <= params.sensing_range ** 2
        info = offset - scale * params.path_loss * np.log(np.maximum(d_target, 1.0))
        new_geometry = FleetGeometry(positions=new_positions,
                                     sink_position=geometry.sink_position,
                                     source_position=geometry.source_position)
        for bits in range(1, 1 << n):
            members = [i for i in range(n) if bits >> i & 1]
            if not all(in_range[i] for i in members):
                continue
            if sum(info[i] for i in members) < min_info:
                continue
            assignment = np.array([i in members for i in range(n)]).reshape(n, 1)
            report = brute_force_oracle(new_geometry, assignment, params)
            expanded += report.nodes_expanded
            if report.plan is None:
                continue
            plan = report.plan
            links = tuple(plan.topology.active_links())
            key = (plan.objective, len(links), links, flat)
            if best_key is None or key < best_key:
                best_key = key
                best = Plan(topology=plan.topology, flows=plan.flows,
                            geometry=new_geometry, per_node=plan.per_node,
                            objective=plan.objective,
                            controls=Controls(
                                speeds=np.array([combos[o][0] for o in opt_idx]),
                                headings=np.array([combos[o][1] for o in opt_idx])))
    wall = time.perf_counter() - t0
    if best is None:
        return SolveReport(None, "no grid point satisfies the constraints",
                           expanded, 0, wall)
    return SolveReport(best, None, expanded, 0, wall)

"""Survey-lane geometry, waypoint sequencing, and vector-field guidance.

A rectangular survey region is split into parallel lanes flown in a
lawn-mower pattern.  Vehicles follow each lane with a two-branch vector
field: beyond the transition boundary they head at the full entry angle
toward the path, inside it the correction blends linearly to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Region:
    """Rectangle of ``length`` meters across lanes, ``width`` along them."""

    length: float
    width: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.length <= 0 or self.width <= 0:
            raise ValueError("region dimensions must be positive")


@dataclass(frozen=True)
class GuidanceParams:
    transition_boundary: float       # m, switch between approach and follow
    entry_angle: float               # rad
    cruise_speed: float              # m/s

    def __post_init__(self) -> None:
        if self.transition_boundary <= 0:
            raise ValueError("transition boundary must be positive")
        if not 0 < self.entry_angle <= math.pi / 2:
            raise ValueError("entry angle must lie in (0, pi/2]")


@dataclass(frozen=True)
class LanePlan:
    """Ordered lanes, each as a (bottom, top) waypoint pair."""

    lanes: tuple[tuple[tuple[float, float], tuple[float, float]], ...]
    overlap: float

    @property
    def count(self) -> int:
        return len(self.lanes)


def lane_count(region_length: float, sensing_range: float, overlap: float) -> int:
    return math.ceil(region_length / (2.0 * overlap * sensing_range)) + 1


def decompose_lanes(region: Region, sensing_range: float, overlap: float) -> LanePlan:
    """Split the region into evenly spaced lanes running the width direction.

    The overlap factor in (0, 1] sets both the lane count and, elsewhere,
    the data aggregation ratio of the mapping scenario.
    """
    if not 0 < overlap <= 1:
        raise ValueError("overlap factor must lie in (0, 1]")
    count = lane_count(region.length, sensing_range, overlap)
    ox, oy = region.origin
    spacing = region.length / (count - 1)
    lanes = []
    for k in range(count):
        x = ox + k * spacing
        lanes.append(((x, oy), (x, oy + region.width)))
    return LanePlan(lanes=tuple(lanes), overlap=overlap)


def next_lane_assignment(uav_index: int, lanes_completed: int, fleet_size: int,
                         plan: LanePlan) -> tuple[tuple[float, float], tuple[float, float]] | None:
    """Waypoint pair for a UAV's next lane, or None when the UAV is done.

    UAV i (1-based) sweeps lanes i, i+n, i+2n, ...; the traversal direction
    alternates so the vehicle starts each new lane at the end nearest to
    where it finished the previous one.
    """
    lane_number = uav_index + lanes_completed * fleet_size
    if lane_number > plan.count:
        return None
    bottom, top = plan.lanes[lane_number - 1]
    if lanes_completed % 2 == 0:
        return (bottom, top)
    return (top, bottom)


def desired_heading(waypoints: tuple[tuple[float, float], tuple[float, float]]) -> float:
    """Heading from the first waypoint toward the second."""
    (ax, ay), (bx, by) = waypoints
    if ax == bx and ay == by:
        raise ValueError("waypoints must be distinct")
    return math.atan2(by - ay, bx - ax)


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def cross_track_error(position: np.ndarray | tuple[float, float],
                      waypoints: tuple[tuple[float, float], tuple[float, float]]) -> float:
    """Signed lateral offset from the lane; positive to the left of travel."""
    (ax, ay), _ = waypoints
    heading = desired_heading(waypoints)
    tx, ty = math.cos(heading), math.sin(heading)
    px, py = float(position[0]), float(position[1])
    return tx * (py - ay) - ty * (px - ax)


def vector_field_heading(position: np.ndarray | tuple[float, float],
                         waypoints: tuple[tuple[float, float], tuple[float, float]],
                         guidance: GuidanceParams) -> float:
    """Commanded heading under the two-branch vector-field law.

    Beyond the transition boundary the command is offset from the lane
    heading by the full entry angle (toward the lane); inside the boundary
    the offset shrinks linearly with the remaining cross-track error.
    """
    heading = desired_heading(waypoints)
    err = cross_track_error(position, waypoints)
    blend = min(1.0, abs(err) / guidance.transition_boundary)
    return wrap_angle(heading - math.copysign(guidance.entry_angle * blend, err))


def along_track_progress(position: np.ndarray | tuple[float, float],
                         waypoints: tuple[tuple[float, float], tuple[float, float]]) -> float:
    """Projection of the vehicle onto the lane, meters from the first waypoint."""
    (ax, ay), _ = waypoints
    heading = desired_heading(waypoints)
    px, py = float(position[0]), float(position[1])
    return math.cos(heading) * (px - ax) + math.sin(heading) * (py - ay)


def lane_length(waypoints: tuple[tuple[float, float], tuple[float, float]]) -> float:
    (ax, ay), (bx, by) = waypoints
    return math.hypot(bx - ax, by - ay)


def data_type_assignment(positions: np.ndarray, sensing_range: float) -> np.ndarray:
    """Sensing-type matrix from pairwise footprint overlap.

    Vehicles closer than twice the sensing range share imagery; every maximal
    clique of the proximity graph becomes one data type and each member
    senses it.  A vehicle bridging two overlap groups therefore carries both
    adjacent types; an isolated vehicle gets a type of its own.  Returns a
    boolean (n, type_count) matrix.
    """
    positions = np.asarray(positions, dtype=float)
    n = positions.shape[0]
    if n > 12:
        raise ValueError("proximity clique enumeration limited to 12 vehicles")
    adjacent = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            close = math.dist(positions[i], positions[j]) <= 2.0 * sensing_range
            adjacent[i][j] = adjacent[j][i] = close

    cliques: list[tuple[int, ...]] = []
    for bits in range(1, 1 << n):
        members = [i for i in range(n) if bits >> i & 1]
        if all(adjacent[a][b] for ai, a in enumerate(members)
               for b in members[ai + 1:]):
            cliques.append(tuple(members))
    maximal = sorted(
        c for c in cliques
        if not any(set(c) < set(other) for other in cliques))

    assignment = np.zeros((n, len(maximal)), dtype=bool)
    for z, clique in enumerate(maximal):
        for i in clique:
            assignment[i, z] = True
    return assignment


def scenario_type_assignment(fleet_size: int, overlap: float) -> np.ndarray:
    """Sensing-type pattern used by the canonical mapping runs.

    Low overlap (< 0.75): neighbouring vehicles in adjacent lanes share a
    type pairwise, so interior vehicles carry two types (chain pattern).
    High overlap (>= 0.75): the whole fleet shares one data type.  The
    boundary value belongs to the high-overlap branch by convention.
    """
    if fleet_size == 1 or overlap >= 0.75:
        return np.ones((fleet_size, 1), dtype=bool)
    assignment = np.zeros((fleet_size, fleet_size - 1), dtype=bool)
    for z in range(fleet_size - 1):
        assignment[z, z] = True
        assignment[z + 1, z] = True
    return assignment

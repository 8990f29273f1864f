"""Energy-optimal information routing for multi-UAV sensing fleets.

A fleet of n UAVs senses one or more data streams and must deliver them to a
base station each decision interval.  Every interval the fleet picks a role
for each vehicle (sensor, relay, aggregator), a set of communication links,
and -- for target tracking -- a speed and heading, so that the total
sensing + processing + radio energy is minimal.
"""

from aggroute.errors import ConfigError, DepletionError, Infeasible
from aggroute.params import FleetGeometry, ScenarioParams
from aggroute.network import FlowAssignment, Topology

__all__ = [
    "ConfigError",
    "DepletionError",
    "Infeasible",
    "FleetGeometry",
    "FlowAssignment",
    "ScenarioParams",
    "Topology",
]

__version__ = "0.1.0"

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aggroute.params import FleetGeometry, ScenarioParams


def make_params(**overrides) -> ScenarioParams:
    """Scenario constants of the tracking experiments, overridable per test."""
    base = dict(
        uav_count=3, type_count=1,
        sense_rate=(5.0,), packet_bits=1024.0, aggregation_ratio=(0.7,),
        bandwidth_bps=7000.0, interval_s=1.0,
        sense_energy=50e-9, process_energy=10e-9, receive_energy=135e-9,
        transmit_energy=45e-9, amp_energy=0.1e-9, path_loss=2.0,
        comm_range=500.0, sensing_range=200.0, safety_range=50.0,
        speed_min=10.0, speed_max=30.0)
    m = overrides.get("type_count", base["type_count"])
    if m != 1:
        base["sense_rate"] = (5.0,) * m
        base["aggregation_ratio"] = (0.7,) * m
    base.update(overrides)
    return ScenarioParams(**base)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdict lines where capture cannot hide them."""
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def params():
    return make_params()


@pytest.fixture
def square_geometry():
    """Three UAVs on a 100 m square with the sink at the origin."""
    return FleetGeometry(
        positions=np.array([[0.0, 100.0], [100.0, 0.0], [100.0, 100.0]]),
        sink_position=np.array([0.0, 0.0]))

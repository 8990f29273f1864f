"""Per-node energy terms, hand-checked values, and the state update."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggroute.energy import (EnergyBreakdown, apply_energy_update,
                             fleet_breakdowns, node_breakdown,
                             processing_energy, receiving_energy,
                             sensing_energy, transmitting_energy)
from aggroute.errors import DepletionError
from aggroute.network import FlowAssignment, make_topology, propagate_flows
from aggroute.params import FleetGeometry

from conftest import make_params
from oracles import linkwise_total_energy
from test_topology import five_node_two_stage_links


def direct_chain(params):
    """Node 1 senses and transmits straight to the sink."""
    n = params.uav_count
    links = np.zeros((n + 2, n + 2, 1), dtype=bool)
    links[0, 1, 0] = links[1, n + 1, 0] = True
    topology = make_topology(links)
    return topology, propagate_flows(topology, params)


class TestSensingEnergy:
    def test_single_type_sensor(self, params):
        topology, _ = direct_chain(params)
        assert sensing_energy(topology, params, 1) == pytest.approx(2.56e-4)

    def test_non_sensor(self, params):
        topology, _ = direct_chain(params)
        assert sensing_energy(topology, params, 2) == 0.0

    def test_two_types_doubles(self):
        params = make_params(type_count=2)
        links = np.zeros((5, 5, 2), dtype=bool)
        for z in range(2):
            links[0, 1, z] = links[1, 4, z] = True
        topology = make_topology(links)
        assert sensing_energy(topology, params, 1) == pytest.approx(5.12e-4)


class TestProcessingEnergy:
    def test_pure_aggregator_charges_received_bits(self):
        params = make_params(bandwidth_bps=1e6)
        links = np.zeros((6, 6, 1), dtype=bool)
        links[0, 1, 0] = links[0, 2, 0] = True
        links[1, 3, 0] = links[2, 3, 0] = True   # node 3 fuses 10 packets
        links[3, 5, 0] = True
        topology = make_topology(links)
        flows = propagate_flows(topology, make_params(uav_count=4, bandwidth_bps=1e6))
        value = processing_energy(topology, flows,
                                  make_params(uav_count=4, bandwidth_bps=1e6), 3)
        assert value == pytest.approx(1.024e-4)

    def test_relay_pays_nothing(self, params):
        links = np.zeros((5, 5, 1), dtype=bool)
        links[0, 1, 0] = links[1, 2, 0] = links[2, 4, 0] = True
        topology = make_topology(links)
        flows = propagate_flows(topology, params)
        assert processing_energy(topology, flows, params, 2) == 0.0

    def test_own_stream_processed_when_fusing(self):
        """A node sensing 5 packets and receiving 10 of the same type
        processes all 15."""
        params = make_params(uav_count=5, type_count=2, bandwidth_bps=1e9)
        topology = make_topology(five_node_two_stage_links())
        flows = propagate_flows(topology, params)
        assert processing_energy(topology, flows, params, 3) == pytest.approx(
            10e-9 * 1024.0 * (10 + 15))
        # Type-2 share alone: senses 5, receives 10, fuses all 15.
        per_type2 = 10e-9 * 1024.0 * 15
        assert per_type2 == pytest.approx(1.536e-4)


class TestReceivingEnergy:
    def test_five_packets(self, params):
        links = np.zeros((5, 5, 1), dtype=bool)
        links[0, 1, 0] = links[1, 2, 0] = links[2, 4, 0] = True
        topology = make_topology(links)
        flows = propagate_flows(topology, params)
        assert receiving_energy(flows, topology, params, 2) == pytest.approx(6.912e-4)

    def test_leaf_sensor_receives_nothing(self, params):
        topology, flows = direct_chain(params)
        assert receiving_energy(flows, topology, params, 1) == 0.0

    def test_fifteen_packets(self):
        params = make_params(uav_count=5, type_count=2, bandwidth_bps=1e9)
        topology = make_topology(five_node_two_stage_links())
        flows = propagate_flows(topology, params)
        # Node 3 receives 5+5 of type 1 and 5+5 of type 2; scale the
        # 5-packet figure accordingly.
        assert receiving_energy(flows, topology, params, 3) == pytest.approx(
            4 * 6.912e-4)
        assert 3 * 6.912e-4 == pytest.approx(2.0736e-3)


class TestTransmittingEnergy:
    def test_hundred_meters(self, params):
        geometry = FleetGeometry(
            positions=np.array([[0.0, 100.0], [50.0, 50.0], [60.0, 60.0]]),
            sink_position=np.zeros(2))
        topology, flows = direct_chain(params)
        assert transmitting_energy(flows, topology, geometry, params, 1) == (
            pytest.approx(5.3504e-3))

    def test_no_out_links(self, params, square_geometry):
        topology, flows = direct_chain(params)
        assert transmitting_energy(flows, topology, square_geometry, params, 3) == 0.0

    def test_diagonal_distance(self, params):
        geometry = FleetGeometry(
            positions=np.array([[100.0, 100.0], [50.0, 50.0], [60.0, 60.0]]),
            sink_position=np.zeros(2))
        topology, flows = direct_chain(params)
        assert transmitting_energy(flows, topology, geometry, params, 1) == (
            pytest.approx(1.04704e-2))

    @given(st.floats(60.0, 400.0), st.floats(1.0, 80.0))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_distance(self, d, extra):
        params = make_params()
        geometry_near = FleetGeometry(
            positions=np.array([[d, 0.0], [500.0, 500.0], [600.0, 600.0]]),
            sink_position=np.zeros(2))
        geometry_far = FleetGeometry(
            positions=np.array([[d + extra, 0.0], [500.0, 500.0], [600.0, 600.0]]),
            sink_position=np.zeros(2))
        topology, flows = direct_chain(params)
        near = transmitting_energy(flows, topology, geometry_near, params, 1)
        far = transmitting_energy(flows, topology, geometry_far, params, 1)
        assert far > near


class TestNodeTotals:
    def test_sensor_at_hundred_meters(self, params):
        geometry = FleetGeometry(
            positions=np.array([[0.0, 100.0], [50.0, 50.0], [60.0, 60.0]]),
            sink_position=np.zeros(2))
        topology, flows = direct_chain(params)
        breakdown = node_breakdown(topology, flows, geometry, params, 1)
        assert breakdown.total == pytest.approx(5.6064e-3)
        assert breakdown.sensing == pytest.approx(2.56e-4)
        assert breakdown.processing == 0.0
        assert breakdown.receiving == 0.0

    def test_idle_node_zero(self, params, square_geometry):
        topology, flows = direct_chain(params)
        breakdown = node_breakdown(topology, flows, square_geometry, params, 3)
        assert breakdown.total == 0.0

    def test_total_sums_components(self):
        breakdown = EnergyBreakdown(sensing=1.0, processing=2.0,
                                    receiving=3.0, transmitting=4.0)
        assert breakdown.total == 10.0

    def test_fleet_total_matches_linkwise_oracle(self):
        """Per-node totals agree with an independent link-by-link
        accumulation of the same plan."""
        params = make_params(uav_count=5, type_count=2, bandwidth_bps=1e9)
        topology = make_topology(five_node_two_stage_links())
        flows = propagate_flows(topology, params)
        geometry = FleetGeometry(
            positions=np.array([[0.0, 100.0], [100.0, 0.0], [100.0, 100.0],
                                [200.0, 100.0], [150.0, 50.0]]),
            sink_position=np.zeros(2))
        per_node = fleet_breakdowns(topology, flows, geometry, params)
        total = sum(b.total for b in per_node)
        assert total == pytest.approx(
            linkwise_total_energy(topology, flows, geometry, params), rel=1e-12)


class TestFlowLinearity:
    def test_doubling_rates_doubles_variable_terms(self, params, square_geometry):
        links = np.zeros((5, 5, 1), dtype=bool)
        links[0, 1, 0] = links[0, 2, 0] = True
        links[2, 1, 0] = links[1, 4, 0] = True
        topology = make_topology(links)
        flows = propagate_flows(topology, params)
        doubled = FlowAssignment(rates=flows.rates * 2.0)
        for node in (1, 2):
            # Processing is affine: the own-sensed volume is fixed by the
            # sensing rate, only the received part scales with link flows.
            own = params.sense_rate[0] if topology.links[0, node, 0] else 0.0
            received = flows.rates[1:4, node, 0].sum()
            if topology.aggregators[node - 1, 0]:
                expected = 10e-9 * 1024.0 * (own + 2 * received)
                assert processing_energy(topology, doubled, params, node) == (
                    pytest.approx(expected, rel=1e-12))
            assert receiving_energy(doubled, topology, params, node) == pytest.approx(
                2 * receiving_energy(flows, topology, params, node), abs=1e-18)
            assert transmitting_energy(
                doubled, topology, square_geometry, params, node) == pytest.approx(
                2 * transmitting_energy(flows, topology, square_geometry,
                                        params, node), abs=1e-18)
            assert sensing_energy(topology, params, node) == sensing_energy(
                topology, params, node)


class TestEnergyUpdate:
    def test_subtracts(self):
        remaining = apply_energy_update(np.array([10.0]), np.array([5.6064e-3]))
        assert remaining[0] == pytest.approx(9.9944, abs=5e-5)

    def test_zero_spend_is_identity(self):
        state = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(apply_energy_update(state, np.zeros(3)), state)

    def test_depletion_names_node(self):
        with pytest.raises(DepletionError) as exc:
            apply_energy_update(np.array([1.0, 1e-3]), np.array([0.0, 5.6064e-3]))
        assert exc.value.node == 2

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ridepool.network import (
    NetworkError,
    RoadNetwork,
    SpaceTimeGrid,
    Unreachable,
    grid_network,
    load_network,
    save_network,
    shortest_time,
    snap_to_stop,
    state_of,
)

from conftest import reference_dijkstra


def test_single_edge():
    net = RoadNetwork([1, 2], [(1, 2, 60), (2, 1, 60)], [1, 2], {1: 0, 2: 0})
    assert shortest_time(net, 1, 2) == 60


def test_identity_is_zero():
    net = RoadNetwork([1, 2], [(1, 2, 60), (2, 1, 60)], [1, 2], {1: 0, 2: 0})
    assert shortest_time(net, 1, 1) == 0


def test_triangle_prefers_two_hops():
    edges = [(0, 1, 60), (1, 2, 60), (0, 2, 150), (2, 0, 60)]
    net = RoadNetwork([0, 1, 2], edges, [0, 1, 2], {0: 0, 1: 0, 2: 0})
    assert shortest_time(net, 0, 2) == 120


def test_unreachable_between_non_stop_nodes():
    # node 3 is a sink outside the stop set
    edges = [(0, 1, 60), (1, 0, 60), (1, 3, 30)]
    net = RoadNetwork([0, 1, 3], edges, [0, 1], {0: 0, 1: 0, 3: 0})
    with pytest.raises(Unreachable):
        shortest_time(net, 3, 0)
    assert shortest_time(net, 0, 3) == 90


def test_asymmetric_times():
    edges = [(0, 1, 60), (1, 0, 200)]
    net = RoadNetwork([0, 1], edges, [0, 1], {0: 0, 1: 0})
    assert shortest_time(net, 0, 1) == 60
    assert shortest_time(net, 1, 0) == 200


def test_parallel_edges_keep_fastest():
    net = RoadNetwork([0, 1], [(0, 1, 90), (0, 1, 40), (1, 0, 10)], [0, 1], {0: 0, 1: 0})
    assert shortest_time(net, 0, 1) == 40


@pytest.mark.parametrize("edges, stops, zones", [
    ([(0, 5, 10)], [0], {0: 0}),                # undeclared node
    ([(0, 1, 0)], [0, 1], {0: 0, 1: 0}),        # zero weight
    ([(0, 1, 10), (1, 0, 10)], [7], {0: 0, 1: 0}),  # stop not a node
    ([(0, 1, 10), (1, 0, 10)], [0, 1], {0: 0}),     # missing zone
    ([(0, 1, 10)], [0, 1], {0: 0, 1: 0}),           # stops not strongly connected
])
def test_invariants_rejected(edges, stops, zones):
    with pytest.raises(NetworkError):
        RoadNetwork([0, 1], edges, stops, zones)


def test_snap_stop_is_itself(grid5):
    for s in grid5.stops:
        assert snap_to_stop(grid5, s) == s


def test_snap_tie_goes_to_lowest_id():
    # node 0 is 120 s from stops 7 and 3
    edges = []
    for a, b in [(0, 1), (1, 7), (0, 2), (2, 3), (3, 7)]:
        edges += [(a, b, 60), (b, a, 60)]
    zones = {n: 0 for n in (0, 1, 2, 3, 7)}
    net = RoadNetwork([0, 1, 2, 3, 7], edges, [3, 7], zones)
    assert shortest_time(net, 0, 3) == shortest_time(net, 0, 7) == 120
    assert snap_to_stop(net, 0) == 3


def test_snap_picks_nearer_stop():
    edges = [(0, 5, 60), (5, 0, 60), (0, 2, 90), (2, 0, 90)]
    net = RoadNetwork([0, 2, 5], edges, [2, 5], {0: 0, 2: 0, 5: 0})
    assert snap_to_stop(net, 0) == 5


@pytest.mark.parametrize("t, expected", [(330, 1), (0, 0), (86399, 287), (86400, 0)])
def test_state_time_index(t, expected):
    net = RoadNetwork([0, 1], [(0, 1, 1), (1, 0, 1)], [0, 1], {0: 12, 1: 3})
    grid = SpaceTimeGrid(300, 288, 13)
    assert state_of(grid, t, 0, net) == (expected, 12)


def test_state_negative_time():
    net = RoadNetwork([0, 1], [(0, 1, 1), (1, 0, 1)], [0, 1], {0: 0, 1: 0})
    with pytest.raises(ValueError):
        state_of(SpaceTimeGrid(), -1, 0, net)


def test_state_of_surjective_over_day(grid5):
    grid = SpaceTimeGrid.for_network(grid5)
    seen = {state_of(grid, t, n, grid5) for t in range(0, 86400, 300) for n in grid5.nodes}
    assert seen == {(t, z) for t in range(288) for z in (0, 1)}
    assert grid.num_periods * grid.period_seconds == 86400


def test_route_nodes_follow_shortest_path(grid5):
    hops = grid5.route_nodes(0, 24)
    assert hops[-1] == (24, shortest_time(grid5, 0, 24))
    times = [t for _, t in hops]
    assert times == sorted(times)
    assert grid5.route_nodes(7, 7) == []


def random_graph(seed, n=12, p=0.3):
    rng = np.random.default_rng(seed)
    edges = []
    for i in range(n):
        # ring keeps everything strongly connected
        edges.append((i, (i + 1) % n, float(rng.integers(10, 200))))
    for u, v in itertools.permutations(range(n), 2):
        if rng.random() < p:
            edges.append((u, v, float(rng.integers(10, 200))))
    stops = sorted(rng.choice(n, size=max(2, n // 2), replace=False).tolist())
    return RoadNetwork(range(n), edges, stops, {i: i % 3 for i in range(n)}), edges


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_matches_reference_dijkstra(seed):
    net, edges = random_graph(seed)
    for a in net.nodes:
        ref = reference_dijkstra(edges, a)
        for b in net.nodes:
            assert shortest_time(net, a, b) == pytest.approx(ref[b], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 11), st.integers(0, 11), st.integers(0, 11))
def test_triangle_inequality(seed, a, b, c):
    net, _ = random_graph(seed)
    assert shortest_time(net, a, c) <= shortest_time(net, a, b) + shortest_time(net, b, c) + 1e-9


def test_file_round_trip(tmp_path, grid5):
    save_network(grid5, tmp_path / "n.csv", tmp_path / "e.csv")
    back = load_network(tmp_path / "n.csv", tmp_path / "e.csv")
    assert back.nodes == grid5.nodes
    assert back.edges == grid5.edges
    assert back.stops == grid5.stops
    assert np.array_equal(back.dist_to, grid5.dist_to)


def test_malformed_rows_report_line_numbers(tmp_path):
    (tmp_path / "n.csv").write_text("node_id,lat,lon,zone_id,is_stop\n0,,,0,1\nx,,,0,1\n1,,,0,maybe\n")
    (tmp_path / "e.csv").write_text("from_node,to_node,travel_time_s\n0,1,60\n")
    with pytest.raises(NetworkError) as err:
        load_network(tmp_path / "n.csv", tmp_path / "e.csv")
    assert "line 3" in str(err.value) and "line 4" in str(err.value)


def test_node_file_without_coordinates(tmp_path):
    (tmp_path / "n.csv").write_text("node_id,zone_id,is_stop\n0,0,1\n1,1,1\n")
    (tmp_path / "e.csv").write_text("from_node,to_node,travel_time_s\n0,1,60\n1,0,60\n")
    net = load_network(tmp_path / "n.csv", tmp_path / "e.csv")
    assert net.num_zones == 2 and shortest_time(net, 0, 1) == 60


def test_grid_network_shape():
    net = grid_network(3, 4, 30.0)
    assert len(net.nodes) == 12
    assert shortest_time(net, 0, 11) == 30.0 * (2 + 3)

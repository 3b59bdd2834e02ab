from __future__ import annotations

import numpy as np
import pytest

from pffc.checks import enumerate_min_path_cost, flow_lp_min, random_dag
from pffc.errors import InfeasibleError, InvalidNetworkError, NoPathExistsError, ParseError
from pffc.flows import (
    CapacitatedFlowPolytope,
    DagNetwork,
    FlowPolytope,
    capacitated_flow_lmo,
    dag_shortest_path_lmo,
    format_network,
    max_flow_value,
    parse_network,
    read_network,
)
from pffc.problems import default_network


def _net(tails, heads, caps, demand=1.0, n=4, source=0, sink=3) -> DagNetwork:
    return DagNetwork(n_nodes=n, tails=tails, heads=heads, capacities=caps, source=source, sink=sink, demand=demand)


def test_shipped_fixture_matches_default_network(data_dir) -> None:
    text = (data_dir / "minflow_default.txt").read_text(encoding="utf-8")
    assert format_network(default_network()) == text
    assert read_network(data_dir / "minflow_default.txt") == default_network()


def test_default_network_shape() -> None:
    net = default_network()
    assert net.n_edges == 9
    assert net.topological_order == (0, 1, 2, 4, 3, 5)
    assert max_flow_value(net) == pytest.approx(6.0)


def test_parse_network_comments_and_canonical_form() -> None:
    text = "# two paths\nnodes 3 source 0 sink 2 demand 1.5\n0 1 2.0  # top\n1 2 2\n0 2 1\n"
    net = parse_network(text)
    assert net.capacities == (2.0, 2.0, 1.0)
    assert format_network(net) == "nodes 3 source 0 sink 2 demand 1.5\n0 1 2\n1 2 2\n0 2 1\n"
    assert parse_network(format_network(net)) == net


@pytest.mark.parametrize(
    "text",
    [
        "",
        "nodes 3 source 0 sink 2\n0 1 1\n",
        "nodes 3 source 0 sink 2 demand 1\n0 1\n",
        "nodes 3 source 0 sink 2 demand 1\n0 x 1\n",
        "nodes 3 source 0 sink 2 demand one\n0 1 1\n",
    ],
)
def test_parse_network_errors(text) -> None:
    with pytest.raises(ParseError):
        parse_network(text)


def test_invalid_networks() -> None:
    with pytest.raises(InvalidNetworkError):
        _net([0, 1, 2], [1, 2, 1], [1, 1, 1])  # cycle 1 -> 2 -> 1
    with pytest.raises(InvalidNetworkError):
        _net([0, 0], [1, 1], [1, 1])
    with pytest.raises(InvalidNetworkError):
        _net([0], [7], [1])
    with pytest.raises(InvalidNetworkError):
        _net([0], [3], [-1])


def test_shortest_path_lmo_two_paths() -> None:
    net = _net([0, 1, 0, 2], [1, 3, 2, 3], [1, 1, 1, 1], demand=2.0)
    x = dag_shortest_path_lmo(net, np.array([1.0, 1.0, 0.5, 0.5]))
    np.testing.assert_array_equal(x, [0.0, 0.0, 2.0, 2.0])


def test_shortest_path_tie_prefers_smaller_predecessor() -> None:
    net = _net([0, 1, 0, 2], [1, 3, 2, 3], [1, 1, 1, 1])
    x = dag_shortest_path_lmo(net, np.ones(4))
    np.testing.assert_array_equal(x, [1.0, 1.0, 0.0, 0.0])


def test_shortest_path_without_route() -> None:
    net = _net([0, 2], [1, 3], [1, 1])
    with pytest.raises(NoPathExistsError):
        dag_shortest_path_lmo(net, np.ones(2))


def test_shortest_path_matches_enumeration(rng) -> None:
    for _ in range(100):
        net = random_dag(rng, n_nodes=int(rng.integers(3, 7)), max_edges=12, demand=float(rng.uniform(0.5, 3)))
        w = rng.normal(size=net.n_edges)
        x = dag_shortest_path_lmo(net, w)
        assert float(x @ w) == pytest.approx(enumerate_min_path_cost(net, w), abs=1e-12)
        assert FlowPolytope(net).contains(x)


def test_capacitated_lmo_splits_over_capacity() -> None:
    net = _net([0, 1, 0, 2], [1, 3, 2, 3], [1, 1, 5, 5], demand=2.0)
    x = capacitated_flow_lmo(net, np.array([0.0, 0.0, 1.0, 1.0]))
    np.testing.assert_allclose(x, [1.0, 1.0, 1.0, 1.0])


def test_capacitated_lmo_matches_lp(rng) -> None:
    for _ in range(50):
        base = random_dag(rng, n_nodes=int(rng.integers(3, 7)), max_edges=12)
        net = DagNetwork(
            n_nodes=base.n_nodes,
            tails=base.tails,
            heads=base.heads,
            capacities=base.capacities,
            source=base.source,
            sink=base.sink,
            demand=0.8 * max_flow_value(base),
        )
        w = rng.normal(size=net.n_edges)
        x = capacitated_flow_lmo(net, w)
        assert CapacitatedFlowPolytope(net).contains(x)
        assert float(x @ w) == pytest.approx(flow_lp_min(net, w), abs=1e-8)


def test_capacitated_infeasible_demand() -> None:
    net = _net([0, 1], [1, 3], [1, 1], demand=2.0)
    with pytest.raises(InfeasibleError):
        CapacitatedFlowPolytope(net)
    with pytest.raises(InfeasibleError):
        capacitated_flow_lmo(net, np.ones(2))


def test_flow_polytope_exact_min_and_diameter() -> None:
    net = default_network()
    poly = FlowPolytope(net)
    w = np.linspace(-1, 1, net.n_edges)
    assert poly.exact_min(w) == pytest.approx(float(poly.lmo(w) @ w))
    assert poly.diameter() == pytest.approx(2 * np.linalg.norm(np.maximum(4.1, net.capacities)))
    assert poly.shape == (9,)

"""Single-commodity flow polytopes on a directed acyclic graph.

Two feasible sets share one :class:`DagNetwork`:

- :class:`FlowPolytope`: nonnegative flows routing ``d`` units from the
  source to the sink with conservation at every node (capacities ignored).
  Its LMO is a shortest path computed by dynamic programming in
  topological order.
- :class:`CapacitatedFlowPolytope`: the same with ``0 <= x_e <= k_e``. Its
  LMO is a linear minimum-cost flow, solved by successive shortest paths with
  node potentials.

Edges are indexed by their position in the network's edge list (file order),
and every flow vector uses that indexing.

Graph file format::

    # comments start with '#'
    nodes <n> source <s> sink <t> demand <d>
    <tail> <head> <capacity>
    ...
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import networkx as nx
import numpy as np
from networkx.algorithms.flow import edmonds_karp

from .core import Point
from .errors import (
    InfeasibleError,
    InvalidNetworkError,
    NoPathExistsError,
    OracleFailure,
    ParseError,
    ShapeMismatchError,
)

logger = logging.getLogger(__name__)

_RESIDUAL_EPS = 1e-12


@dataclass(frozen=True)
class DagNetwork:
    """Directed acyclic graph with capacities, a source, a sink and a demand."""

    n_nodes: int
    tails: tuple[int, ...]
    heads: tuple[int, ...]
    capacities: tuple[float, ...]
    source: int
    sink: int
    demand: float
    topological_order: tuple[int, ...] = field(init=False, compare=False)
    in_edges: tuple[tuple[int, ...], ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        tails = tuple(int(u) for u in self.tails)
        heads = tuple(int(v) for v in self.heads)
        caps = tuple(float(k) for k in self.capacities)
        object.__setattr__(self, "tails", tails)
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "demand", float(self.demand))
        n = int(self.n_nodes)
        if n < 2:
            raise InvalidNetworkError(f"a network needs at least 2 nodes, got {n}")
        if not (len(tails) == len(heads) == len(caps)) or not tails:
            raise InvalidNetworkError("edge lists must be non-empty and of equal length")
        for node in (*tails, *heads, self.source, self.sink):
            if not 0 <= node < n:
                raise InvalidNetworkError(f"node id {node} outside 0..{n - 1}")
        if self.source == self.sink:
            raise InvalidNetworkError("source and sink must differ")
        if any(u == v for u, v in zip(tails, heads)):
            raise InvalidNetworkError("self-loops are not allowed")
        if len(set(zip(tails, heads))) != len(tails):
            raise InvalidNetworkError("every edge must be distinct")
        if any(not (k >= 0 and math.isfinite(k)) for k in caps):
            raise InvalidNetworkError("capacities must be finite and >= 0")
        if not (self.demand >= 0 and math.isfinite(self.demand)):
            raise InvalidNetworkError(f"demand must be >= 0, got {self.demand}")

        graph = self.to_networkx()
        if not nx.is_directed_acyclic_graph(graph):
            raise InvalidNetworkError("the network contains a directed cycle")
        order = tuple(nx.lexicographical_topological_sort(graph))
        incoming: list[list[int]] = [[] for _ in range(n)]
        for e, v in enumerate(heads):
            incoming[v].append(e)
        object.__setattr__(self, "topological_order", order)
        object.__setattr__(self, "in_edges", tuple(tuple(es) for es in incoming))

    @property
    def n_edges(self) -> int:
        return len(self.tails)

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n_nodes))
        for e, (u, v) in enumerate(zip(self.tails, self.heads)):
            graph.add_edge(u, v, capacity=self.capacities[e], index=e)
        return graph

    def supply(self) -> np.ndarray:
        """Net supply ``r``: ``+d`` at the source, ``-d`` at the sink, else 0."""

        r = np.zeros(self.n_nodes)
        r[self.source] = self.demand
        r[self.sink] = -self.demand
        return r

    def incidence(self) -> np.ndarray:
        """Node-arc incidence matrix: ``+1`` at the tail, ``-1`` at the head."""

        a = np.zeros((self.n_nodes, self.n_edges))
        for e, (u, v) in enumerate(zip(self.tails, self.heads)):
            a[u, e] = 1.0
            a[v, e] = -1.0
        return a

    def conservation_residual(self, x: Point) -> float:
        """``max_i |out_i(x) - in_i(x) - r_i|``."""

        return float(np.max(np.abs(self.incidence() @ x - self.supply())))

    def box_upper(self) -> np.ndarray:
        """Per-edge upper bounds ``max{d, k_e}`` of the auxiliary box."""

        return np.maximum(self.demand, np.asarray(self.capacities))

    def diameter(self) -> float:
        """``2 * sqrt(sum_e max{d, k_e}^2)``; every flow coordinate lies in ``[0, max{d, k_e}]``."""

        return 2.0 * float(np.linalg.norm(self.box_upper()))


def _parse_number(token: str, what: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: {what} {token!r} is not a number") from exc


def _parse_int(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError as exc:
        raise ParseError(f"line {lineno}: {what} {token!r} is not an integer") from exc


def parse_network(text: str) -> DagNetwork:
    """Parse the graph file format described in the module docstring.

    Raises
    ------
    ParseError
        On a missing or malformed header or edge line.
    InvalidNetworkError
        If the parsed graph breaks a network invariant.
    """

    header: dict[str, str] | None = None
    tails: list[int] = []
    heads: list[int] = []
    caps: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 8 or tokens[0::2] != ["nodes", "source", "sink", "demand"]:
                raise ParseError(
                    f"line {lineno}: expected 'nodes <n> source <s> sink <t> demand <d>'"
                )
            header = dict(zip(tokens[0::2], tokens[1::2]))
            continue
        if len(tokens) != 3:
            raise ParseError(f"line {lineno}: expected 'tail head capacity', got {line!r}")
        tails.append(_parse_int(tokens[0], "tail", lineno))
        heads.append(_parse_int(tokens[1], "head", lineno))
        caps.append(_parse_number(tokens[2], "capacity", lineno))
    if header is None:
        raise ParseError("missing header line")
    return DagNetwork(
        n_nodes=_parse_int(header["nodes"], "nodes", 1),
        tails=tuple(tails),
        heads=tuple(heads),
        capacities=tuple(caps),
        source=_parse_int(header["source"], "source", 1),
        sink=_parse_int(header["sink"], "sink", 1),
        demand=_parse_number(header["demand"], "demand", 1),
    )


def read_network(path: str | Path) -> DagNetwork:
    return parse_network(Path(path).read_text(encoding="utf-8"))


def _format_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def format_network(net: DagNetwork) -> str:
    """Canonical text form of *net*; ``parse_network`` reads it back exactly."""

    lines = [
        f"nodes {net.n_nodes} source {net.source} sink {net.sink} "
        f"demand {_format_number(net.demand)}"
    ]
    for u, v, k in zip(net.tails, net.heads, net.capacities):
        lines.append(f"{u} {v} {_format_number(k)}")
    return "\n".join(lines) + "\n"


def _check_weights(net: DagNetwork, weights: Point) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (net.n_edges,):
        raise ShapeMismatchError(f"expected {net.n_edges} edge weights, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("edge weights must be finite")
    return w


def _dag_distances(net: DagNetwork, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Shortest distances from the source and the chosen incoming edge per node.

    Among equally short predecessors the one with the smallest node id wins.
    """

    dist = np.full(net.n_nodes, np.inf)
    pred = np.full(net.n_nodes, -1, dtype=np.int64)
    dist[net.source] = 0.0
    for v in net.topological_order:
        if v == net.source:
            continue
        best, best_tail, best_edge = np.inf, -1, -1
        for e in net.in_edges[v]:
            u = net.tails[e]
            if not np.isfinite(dist[u]):
                continue
            cand = dist[u] + w[e]
            if cand < best or (cand == best and u < best_tail):
                best, best_tail, best_edge = cand, u, e
        dist[v] = best
        pred[v] = best_edge
    return dist, pred


def dag_shortest_path_lmo(net: DagNetwork, weights: Point) -> Point:
    """Vertex of the flow polytope minimising ``<w, x>``.

    Returns ``d`` times the indicator of a minimum-weight source-sink path.
    Negative weights are fine because the graph is acyclic.

    Raises
    ------
    NoPathExistsError
        If the sink is unreachable from the source.
    """

    w = _check_weights(net, weights)
    dist, pred = _dag_distances(net, w)
    if not np.isfinite(dist[net.sink]):
        raise NoPathExistsError(f"no path from node {net.source} to node {net.sink}")
    x = np.zeros(net.n_edges)
    node = net.sink
    while node != net.source:
        e = int(pred[node])
        x[e] = net.demand
        node = net.tails[e]
    return x


@lru_cache(maxsize=64)
def max_flow_value(net: DagNetwork) -> float:
    """Maximum source-sink flow under the capacities (augmenting paths)."""

    return float(
        nx.maximum_flow_value(net.to_networkx(), net.source, net.sink, flow_func=edmonds_karp)
    )


def check_routable(net: DagNetwork) -> None:
    """Raise :class:`InfeasibleError` when the capacities cannot carry ``d``."""

    cap = max_flow_value(net)
    if cap < net.demand - 1e-12 * max(1.0, net.demand):
        raise InfeasibleError(f"max flow {cap:.6g} is below the demand {net.demand:.6g}")


def capacitated_flow_lmo(net: DagNetwork, weights: Point) -> Point:
    """Exact minimum of ``<w, x>`` over capacitated flows of value ``d``.

    Successive shortest paths on the residual graph; Dijkstra runs on reduced
    costs whose initial potentials are the DAG shortest distances, so
    negative weights are handled without Bellman-Ford.

    Raises
    ------
    InfeasibleError
        If the capacities cannot carry the demand.
    """

    w = _check_weights(net, weights)
    check_routable(net)
    n, n_edges = net.n_nodes, net.n_edges
    flow = np.zeros(n_edges)
    if net.demand == 0:
        return flow

    # residual arcs: 2e forward (tail -> head), 2e + 1 backward
    arc_from = np.empty(2 * n_edges, dtype=np.int64)
    arc_to = np.empty(2 * n_edges, dtype=np.int64)
    arc_cost = np.empty(2 * n_edges)
    out_arcs: list[list[int]] = [[] for _ in range(n)]
    for e, (u, v) in enumerate(zip(net.tails, net.heads)):
        arc_from[2 * e], arc_to[2 * e], arc_cost[2 * e] = u, v, w[e]
        arc_from[2 * e + 1], arc_to[2 * e + 1], arc_cost[2 * e + 1] = v, u, -w[e]
        out_arcs[u].append(2 * e)
        out_arcs[v].append(2 * e + 1)
    caps = np.asarray(net.capacities)

    def residual(arc: int) -> float:
        e = arc // 2
        return caps[e] - flow[e] if arc % 2 == 0 else flow[e]

    dist0, _ = _dag_distances(net, w)
    potential = np.where(np.isfinite(dist0), dist0, 0.0)

    remaining = net.demand
    tol = _RESIDUAL_EPS * max(1.0, net.demand)
    max_rounds = 10 * (n_edges + 1) ** 2
    for _ in range(max_rounds):
        if remaining <= tol:
            break
        dist = np.full(n, np.inf)
        pred_arc = np.full(n, -1, dtype=np.int64)
        dist[net.source] = 0.0
        heap: list[tuple[float, int]] = [(0.0, net.source)]
        done = np.zeros(n, dtype=bool)
        while heap:
            d_u, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for arc in out_arcs[u]:
                if residual(arc) <= _RESIDUAL_EPS:
                    continue
                v = int(arc_to[arc])
                reduced = max(arc_cost[arc] + potential[u] - potential[v], 0.0)
                cand = d_u + reduced
                if cand < dist[v]:
                    dist[v] = cand
                    pred_arc[v] = arc
                    heapq.heappush(heap, (cand, v))
        if not done[net.sink]:
            raise InfeasibleError("residual graph disconnected before the demand was routed")
        # capping at the sink distance keeps every residual reduced cost >= 0
        potential = potential + np.minimum(dist, dist[net.sink])

        path: list[int] = []
        node = net.sink
        while node != net.source:
            arc = int(pred_arc[node])
            path.append(arc)
            node = int(arc_from[arc])
        push = min(remaining, min(residual(arc) for arc in path))
        for arc in path:
            e = arc // 2
            flow[e] += push if arc % 2 == 0 else -push
        remaining -= push
    else:
        raise OracleFailure("successive shortest paths did not finish")

    np.clip(flow, 0.0, caps, out=flow)
    return flow


@dataclass(frozen=True)
class FlowPolytope:
    """Flows satisfying conservation, capacities ignored."""

    net: DagNetwork
    shape: tuple[int] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", (self.net.n_edges,))

    def lmo(self, direction: Point, budget: float = 0.0, rng: np.random.Generator | None = None) -> Point:
        return dag_shortest_path_lmo(self.net, direction)

    def exact_min(self, direction: Point) -> float:
        return float(np.dot(dag_shortest_path_lmo(self.net, direction), direction))

    def contains(self, x: Point, tol: float = 1e-8) -> bool:
        if np.shape(x) != self.shape:
            raise ShapeMismatchError(f"expected shape {self.shape}, got {np.shape(x)}")
        return bool(np.all(x >= -tol)) and self.net.conservation_residual(x) <= tol

    def diameter(self) -> float:
        return self.net.diameter()


@dataclass(frozen=True)
class CapacitatedFlowPolytope:
    """Flows satisfying conservation and ``0 <= x_e <= k_e``."""

    net: DagNetwork
    shape: tuple[int] = field(init=False)

    def __post_init__(self) -> None:
        check_routable(self.net)
        object.__setattr__(self, "shape", (self.net.n_edges,))

    def lmo(self, direction: Point, budget: float = 0.0, rng: np.random.Generator | None = None) -> Point:
        return capacitated_flow_lmo(self.net, direction)

    def exact_min(self, direction: Point) -> float:
        return float(np.dot(capacitated_flow_lmo(self.net, direction), direction))

    def contains(self, x: Point, tol: float = 1e-8) -> bool:
        if np.shape(x) != self.shape:
            raise ShapeMismatchError(f"expected shape {self.shape}, got {np.shape(x)}")
        caps = np.asarray(self.net.capacities)
        return (
            bool(np.all(x >= -tol) and np.all(x <= caps + tol))
            and self.net.conservation_residual(x) <= tol
        )

    def diameter(self) -> float:
        return self.net.diameter()


__all__ = [
    "DagNetwork",
    "parse_network",
    "read_network",
    "format_network",
    "dag_shortest_path_lmo",
    "max_flow_value",
    "check_routable",
    "capacitated_flow_lmo",
    "FlowPolytope",
    "CapacitatedFlowPolytope",
]

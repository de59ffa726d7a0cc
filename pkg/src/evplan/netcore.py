"""Road-network model, continuous network points and coverage queries.

Vertices carry a zone tag; edges are undirected and stored with the
lexicographically-smaller endpoint first (by vertex order in the network).
A point on the network is either a vertex or an ``(edge, offset)`` pair with
the offset measured from the edge's first vertex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

#: Geometric tolerance (miles) used for every distance comparison.
TOL = 1e-9


class NetworkError(ValueError):
    """Raised when network input violates a structural invariant."""


@dataclass(frozen=True)
class Vertex:
    id: str
    zone: str
    x: float | None = None
    y: float | None = None


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    length: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.a, self.b)


@dataclass(frozen=True)
class RangeConfig:
    """Driving range ``R`` (miles) and guaranteed initial charge fraction ``alpha``."""

    R: float
    alpha: float

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise NetworkError(f"range R must be positive, got {self.R}")
        if not 0.0 <= self.alpha <= 1.0:
            raise NetworkError(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def radius(self) -> float:
        """Usable driving radius alpha*R."""
        return self.alpha * self.R


@dataclass(frozen=True)
class ODPair:
    """Origin-destination pair with round-trip flow; origin precedes destination."""

    origin: str
    destination: str
    flow: float = field(default=0.0, compare=False)

    @property
    def key(self) -> tuple[str, str]:
        return (self.origin, self.destination)

    def label(self) -> str:
        return f"q({self.origin},{self.destination})"


class Network:
    """Connected undirected road network with zone-tagged vertices and O-D flows.

    Args:
        vertices: vertex records; their order fixes the vertex index used for
            edge orientation and O-D ordering.
        edges: undirected edges; ``(a, b)`` is re-oriented so ``a`` precedes ``b``.
        flows: mapping ``(i, j) -> round trips per day``; keys are re-oriented.

    Raises:
        NetworkError: on self-loops, duplicate edges, non-positive lengths,
            unknown vertex references or negative flows. Connectivity is
            checked by :func:`build_distance_table`.
    """

    def __init__(
        self,
        vertices: Sequence[Vertex],
        edges: Iterable[Edge],
        flows: Mapping[tuple[str, str], float] | None = None,
    ) -> None:
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        if not self.vertices:
            raise NetworkError("network has no vertices")
        self.index: dict[str, int] = {}
        for k, v in enumerate(self.vertices):
            if v.id in self.index:
                raise NetworkError(f"duplicate vertex id {v.id!r}")
            self.index[v.id] = k

        oriented: dict[tuple[str, str], Edge] = {}
        for n, e in enumerate(edges):
            for end in (e.a, e.b):
                if end not in self.index:
                    raise NetworkError(f"edges[{n}]: unknown vertex {end!r}")
            if e.a == e.b:
                raise NetworkError(f"edges[{n}]: self-loop at {e.a!r}")
            if not (e.length > 0 and np.isfinite(e.length)):
                raise NetworkError(f"edges[{n}] ({e.a},{e.b}): length must be positive, got {e.length}")
            a, b = self.orient(e.a, e.b)
            if (a, b) in oriented:
                raise NetworkError(f"edges[{n}]: duplicate edge ({a},{b})")
            oriented[(a, b)] = Edge(a, b, float(e.length))
        self.edges: tuple[Edge, ...] = tuple(
            sorted(oriented.values(), key=lambda e: (self.index[e.a], self.index[e.b]))
        )
        self._edge_by_key = {e.key: e for e in self.edges}

        self.flows: dict[tuple[str, str], float] = {}
        for (i, j), f in (flows or {}).items():
            for end in (i, j):
                if end not in self.index:
                    raise NetworkError(f"flow ({i},{j}): unknown vertex {end!r}")
            if i == j:
                raise NetworkError(f"flow ({i},{j}): origin equals destination")
            if f < 0:
                raise NetworkError(f"flow ({i},{j}): negative flow {f}")
            key = self.orient(i, j)
            self.flows[key] = self.flows.get(key, 0.0) + float(f)
        self.flows = dict(sorted(self.flows.items(), key=lambda kv: self.pair_sort_key(kv[0])))

    def orient(self, u: str, v: str) -> tuple[str, str]:
        return (u, v) if self.index[u] < self.index[v] else (v, u)

    def pair_sort_key(self, key: tuple[str, str]) -> tuple[int, int]:
        return (self.index[key[0]], self.index[key[1]])

    def edge(self, u: str, v: str) -> Edge:
        try:
            return self._edge_by_key[self.orient(u, v)]
        except KeyError:
            raise NetworkError(f"no edge between {u!r} and {v!r}") from None

    def zone_of(self, vertex_id: str) -> str:
        return self.vertices[self.index[vertex_id]].zone

    @property
    def zones(self) -> list[str]:
        return sorted({v.zone for v in self.vertices})

    @property
    def has_coordinates(self) -> bool:
        return all(v.x is not None and v.y is not None for v in self.vertices)

    def validate_range(self, rng: RangeConfig) -> None:
        """Reject edges longer than 2*alpha*R (no clamping)."""
        limit = 2.0 * rng.radius
        for e in self.edges:
            if e.length > limit + TOL:
                raise NetworkError(
                    f"edge ({e.a},{e.b}) has length {e.length} > 2*alpha*R = {limit}; "
                    "a vehicle entering it could not reach a station"
                )


@dataclass(frozen=True)
class NetworkPoint:
    """A location on the network.

    Use :meth:`at_vertex` or :meth:`on_edge`; the latter canonicalizes
    offsets at either edge end to the vertex form.
    """

    vertex: str | None = None
    edge: tuple[str, str] | None = None
    offset: float = 0.0

    @classmethod
    def at_vertex(cls, v: str) -> NetworkPoint:
        return cls(vertex=v)

    @classmethod
    def on_edge(cls, network: Network, u: str, v: str, offset: float, *, from_vertex: str | None = None) -> NetworkPoint:
        """Point at ``offset`` miles along edge ``(u, v)``.

        The offset is measured from ``from_vertex`` (default: the edge's first
        vertex in network order).
        """
        e = network.edge(u, v)
        if from_vertex is not None and from_vertex == e.b:
            offset = e.length - offset
        elif from_vertex is not None and from_vertex != e.a:
            raise NetworkError(f"{from_vertex!r} is not an end of edge ({e.a},{e.b})")
        if offset < -TOL or offset > e.length + TOL:
            raise NetworkError(f"offset {offset} outside edge ({e.a},{e.b}) of length {e.length}")
        if offset <= TOL:
            return cls(vertex=e.a)
        if offset >= e.length - TOL:
            return cls(vertex=e.b)
        return cls(edge=e.key, offset=float(offset))

    @property
    def is_vertex(self) -> bool:
        return self.vertex is not None

    def validate(self, network: Network) -> None:
        if self.is_vertex:
            if self.vertex not in network.index:
                raise NetworkError(f"unknown vertex {self.vertex!r}")
            return
        if self.edge is None:
            raise NetworkError("network point has neither vertex nor edge")
        e = network.edge(*self.edge)
        if e.key != tuple(self.edge):
            raise NetworkError(f"edge key {self.edge} not in canonical order")
        if not (TOL < self.offset < e.length - TOL):
            raise NetworkError(f"offset {self.offset} is not interior to edge {e.key}")

    def sort_key(self, network: Network) -> tuple[int, int, float]:
        if self.is_vertex:
            k = network.index[self.vertex]
            return (k, k, 0.0)
        return (network.index[self.edge[0]], network.index[self.edge[1]], self.offset)

    def label(self) -> str:
        if self.is_vertex:
            return self.vertex
        return f"({self.edge[0]},{self.edge[1]})@{self.offset:.6f}"

    def zone(self, network: Network) -> str:
        """Zone of the point: its vertex, or the nearer edge end (ties go to the first end)."""
        if self.is_vertex:
            return network.zone_of(self.vertex)
        e = network.edge(*self.edge)
        near = e.a if self.offset <= e.length / 2.0 + TOL else e.b
        return network.zone_of(near)

    def coordinates(self, network: Network) -> tuple[float, float]:
        if self.is_vertex:
            v = network.vertices[network.index[self.vertex]]
            return (v.x, v.y)
        e = network.edge(*self.edge)
        va = network.vertices[network.index[e.a]]
        vb = network.vertices[network.index[e.b]]
        s = self.offset / e.length
        return (va.x + s * (vb.x - va.x), va.y + s * (vb.y - va.y))


class DistanceTable:
    """All-pairs shortest-path distances between vertices."""

    def __init__(self, network: Network, matrix: np.ndarray) -> None:
        self.network = network
        self.matrix = matrix
        self.matrix.setflags(write=False)

    def __call__(self, u: str, v: str) -> float:
        idx = self.network.index
        return float(self.matrix[idx[u], idx[v]])


def build_distance_table(network: Network) -> DistanceTable:
    """Exact shortest-path lengths over edge weights (Dijkstra, all sources).

    Raises:
        NetworkError: naming an unreachable vertex pair if the graph is disconnected.
    """
    n = len(network.vertices)
    rows, cols, vals = [], [], []
    for e in network.edges:
        i, j = network.index[e.a], network.index[e.b]
        rows += [i, j]
        cols += [j, i]
        vals += [e.length, e.length]
    graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
    dist = shortest_path(graph, method="D", directed=False)
    unreachable = np.argwhere(~np.isfinite(dist))
    if unreachable.size:
        i, j = unreachable[0]
        raise NetworkError(
            f"network is disconnected: no path between {network.vertices[i].id!r} "
            f"and {network.vertices[j].id!r}"
        )
    # enforce exact symmetry against floating summation order
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    return DistanceTable(network, dist)


def point_vertex_distance(network: Network, table: DistanceTable, x: NetworkPoint, v: str) -> float:
    """Shortest distance from a network point to a vertex, via either edge end."""
    if x.is_vertex:
        return table(x.vertex, v)
    e = network.edge(*x.edge)
    return min(table(e.a, v) + x.offset, table(e.b, v) + (e.length - x.offset))


def point_distance(network: Network, table: DistanceTable, x: NetworkPoint, y: NetworkPoint) -> float:
    """Shortest distance between two network points.

    Takes the minimum over the end vertices of both points' edges, plus the
    direct along-edge distance when both points lie on the same edge.
    """
    if y.is_vertex:
        return point_vertex_distance(network, table, x, y.vertex)
    if x.is_vertex:
        return point_vertex_distance(network, table, y, x.vertex)
    ey = network.edge(*y.edge)
    best = min(
        point_vertex_distance(network, table, x, ey.a) + y.offset,
        point_vertex_distance(network, table, x, ey.b) + (ey.length - y.offset),
    )
    if tuple(x.edge) == tuple(y.edge):
        best = min(best, abs(x.offset - y.offset))
    return best


def build_od_pairs(network: Network, table: DistanceTable, rng: RangeConfig) -> list[ODPair]:
    """O-D pairs with positive flow whose round trip is coverable (d <= 2*alpha*R)."""
    limit = 2.0 * rng.radius
    pairs = [
        ODPair(i, j, f)
        for (i, j), f in network.flows.items()
        if f > 0 and table(i, j) <= limit + TOL
    ]
    pairs.sort(key=lambda q: network.pair_sort_key(q.key))
    return pairs


def covers(network: Network, table: DistanceTable, x: NetworkPoint, q: ODPair, radius: float) -> bool:
    """Whether a station at ``x`` lies within ``radius`` of both ends of ``q``."""
    return (
        point_vertex_distance(network, table, x, q.origin) <= radius + TOL
        and point_vertex_distance(network, table, x, q.destination) <= radius + TOL
    )


def coverage_set(
    network: Network,
    table: DistanceTable,
    x: NetworkPoint,
    pairs: Iterable[ODPair],
    rng: RangeConfig | float,
) -> list[ODPair]:
    """Pairs whose origin and destination are both within alpha*R of ``x``."""
    radius = rng.radius if isinstance(rng, RangeConfig) else float(rng)
    return [q for q in pairs if covers(network, table, x, q, radius)]


def covered_flow(coverage: Iterable[ODPair]) -> float:
    return float(sum(q.flow for q in coverage))

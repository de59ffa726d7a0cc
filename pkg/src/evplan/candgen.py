"""Candidate station sites via edge scanning, after removing pairs that
existing stations already serve.

For every uncovered O-D pair and every edge, the edge portion where a single
station serves the pair is the union of four closed intervals:

* pass-through trips entering at one end and leaving at the other
  (two orientations, bounded by :func:`gamma`), and
* U-turn trips entering and leaving through the same end
  (two ends, bounded by :func:`delta`).

The boundaries of those intervals form a finite dominating set: some
boundary point always covers at least as much flow as any point on the
network.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .netcore import (
    TOL,
    DistanceTable,
    Edge,
    Network,
    NetworkError,
    NetworkPoint,
    ODPair,
    RangeConfig,
    covered_flow,
    coverage_set,
    covers,
)


class TripType(str, enum.Enum):
    PASS_THROUGH = "type1"
    U_TURN = "type2"


@dataclass(frozen=True)
class ExistingStation:
    id: str
    location: NetworkPoint


@dataclass(frozen=True)
class RefuelingSegment:
    """Closed offset interval ``[start, end]`` on ``edge`` (offsets from ``edge[0]``)."""

    edge: tuple[str, str]
    start: float
    end: float
    pair: ODPair
    trip_type: TripType
    entry: str  # vertex the trip enters the edge through

    def contains(self, offset: float) -> bool:
        return self.start - TOL <= offset <= self.end + TOL


@dataclass
class Endpoint:
    id: str
    location: NetworkPoint
    sources: list[tuple[ODPair, TripType, str]] = field(default_factory=list)


@dataclass
class EndpointCatalog:
    """Deduplicated candidate endpoints and their coverage of the uncovered pairs.

    ``matrix[w, q]`` is 1 when endpoint ``w`` covers ``pairs[q]``. Existing
    stations are carried alongside (never as candidates) so downstream stages
    can address them.
    """

    network: Network
    pairs: list[ODPair]
    endpoints: list[Endpoint]
    covered_pairs: list[list[ODPair]]
    covered_flow: list[float]
    matrix: np.ndarray
    existing: list[ExistingStation] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.endpoints)

    def endpoint(self, wid: str) -> Endpoint:
        for ep in self.endpoints:
            if ep.id == wid:
                return ep
        raise KeyError(wid)

    def zone_of(self, wid: str) -> str:
        return self.endpoint(wid).location.zone(self.network)

    def zone_partition(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {z: [] for z in self.network.zones}
        for ep in self.endpoints:
            out[ep.location.zone(self.network)].append(ep.id)
        return out

    def sparse_pairs(self) -> list[tuple[str, str]]:
        """Nonzeros of the coverage matrix as ``(endpoint id, pair label)``."""
        rows, cols = np.nonzero(self.matrix)
        return [(self.endpoints[w].id, self.pairs[q].label()) for w, q in zip(rows, cols)]


def existing_domain(
    network: Network,
    table: DistanceTable,
    stations: Iterable[ExistingStation],
    pairs: Sequence[ODPair],
    rng: RangeConfig,
) -> list[ODPair]:
    """Union of the pairs covered by any existing station, in ``pairs`` order."""
    hit: set[ODPair] = set()
    for u in stations:
        u.location.validate(network)
        hit.update(coverage_set(network, table, u.location, pairs, rng))
    return [q for q in pairs if q in hit]


def uncovered_pairs(all_pairs: Sequence[ODPair], domain: Iterable[ODPair]) -> list[ODPair]:
    """Set difference ``all_pairs - domain``, preserving order."""
    universe = set(all_pairs)
    removed = set()
    for q in domain:
        if q not in universe:
            raise NetworkError(f"{q.label()} is not among the candidate O-D pairs")
        removed.add(q)
    return [q for q in all_pairs if q not in removed]


def gamma(table: DistanceTable, k: str, r: str, edge: Edge, radius: float) -> float:
    """Reach along ``edge`` for a trip from ``k`` entering through ``r``.

    Negative values mean ``r`` itself is out of reach.
    """
    if r not in edge.key:
        raise NetworkError(f"{r!r} is not an end of edge {edge.key}")
    return min(radius - table(k, r), edge.length)


def delta(table: DistanceTable, pair: ODPair, edge: Edge, r: str, radius: float) -> float:
    """Reach from ``r`` into ``edge`` for a U-turn trip serving both ends of ``pair``."""
    if r not in edge.key:
        raise NetworkError(f"{r!r} is not an end of edge {edge.key}")
    far = max(table(pair.origin, r), table(pair.destination, r))
    return min(radius - far, edge.length)


def _interval(lo: float, hi: float, length: float) -> tuple[float, float] | None:
    lo, hi = max(lo, 0.0), min(hi, length)
    if lo > hi + TOL:
        return None
    if hi < lo:
        hi = lo
    return lo, hi


def type1_segments(table: DistanceTable, pair: ODPair, edge: Edge, radius: float) -> list[RefuelingSegment]:
    """Pass-through segments: the origin side enters at ``r``, the destination side at the other end."""
    out = []
    L = edge.length
    for r, c in ((edge.a, edge.b), (edge.b, edge.a)):
        g_in = gamma(table, pair.origin, r, edge, radius)
        g_out = gamma(table, pair.destination, c, edge, radius)
        if g_in < -TOL or g_out < -TOL:
            continue
        # l(r, x) <= g_in and l(c, x) <= g_out, in offsets from edge.a
        if r == edge.a:
            span = _interval(L - g_out, g_in, L)
        else:
            span = _interval(L - g_in, g_out, L)
        if span is not None:
            out.append(RefuelingSegment(edge.key, span[0], span[1], pair, TripType.PASS_THROUGH, r))
    return out


def type2_segments(table: DistanceTable, pair: ODPair, edge: Edge, radius: float) -> list[RefuelingSegment]:
    """U-turn segments reachable from each end; a zero reach yields the end point itself."""
    out = []
    L = edge.length
    for r in edge.key:
        d = delta(table, pair, edge, r, radius)
        if d < -TOL:
            continue
        d = max(d, 0.0)
        start, end = (0.0, d) if r == edge.a else (L - d, L)
        out.append(RefuelingSegment(edge.key, start, end, pair, TripType.U_TURN, r))
    return out


def edge_segments(table: DistanceTable, pair: ODPair, edge: Edge, radius: float) -> list[RefuelingSegment]:
    return type1_segments(table, pair, edge, radius) + type2_segments(table, pair, edge, radius)


@dataclass(frozen=True)
class RawEndpoint:
    edge: tuple[str, str]
    offset: float
    pair: ODPair
    trip_type: TripType
    entry: str


def scan_edge(table: DistanceTable, edge: Edge, pairs: Iterable[ODPair], radius: float) -> list[RawEndpoint]:
    """Boundary offsets of every refueling segment on ``edge`` (at most eight per pair)."""
    raw = []
    for q in pairs:
        for seg in edge_segments(table, q, edge, radius):
            raw.append(RawEndpoint(edge.key, seg.start, q, seg.trip_type, seg.entry))
            raw.append(RawEndpoint(edge.key, seg.end, q, seg.trip_type, seg.entry))
    return raw


def build_catalog(
    network: Network,
    table: DistanceTable,
    pairs: Sequence[ODPair],
    rng: RangeConfig,
    existing: Sequence[ExistingStation] = (),
) -> EndpointCatalog:
    """Scan all edges, merge coincident endpoints and compute their coverage.

    Endpoints are ordered by (edge, offset) of their first occurrence (vertex
    endpoints sort at their vertex index) and named ``w1, w2, ...``.
    """
    radius = rng.radius
    merged: dict[tuple, tuple[NetworkPoint, tuple, list]] = {}
    for edge in network.edges:
        for raw in scan_edge(table, edge, pairs, radius):
            pt = NetworkPoint.on_edge(network, edge.a, edge.b, raw.offset)
            key = _location_key(pt)
            order = pt.sort_key(network)
            src = (raw.pair, raw.trip_type, raw.entry)
            if key in merged:
                prev_pt, prev_order, sources = merged[key]
                if src not in sources:
                    sources.append(src)
                if order < prev_order:
                    merged[key] = (pt, order, sources)
            else:
                merged[key] = (pt, order, [src])

    # merge points closer than TOL that rounding placed in neighbouring keys
    items = sorted(merged.values(), key=lambda t: t[1])
    collapsed: list[tuple[NetworkPoint, tuple, list]] = []
    for pt, order, sources in items:
        if collapsed:
            ppt, porder, psrc = collapsed[-1]
            if (
                not pt.is_vertex
                and not ppt.is_vertex
                and ppt.edge == pt.edge
                and abs(ppt.offset - pt.offset) <= TOL
            ):
                psrc.extend(s for s in sources if s not in psrc)
                continue
        collapsed.append((pt, order, sources))

    endpoints = [Endpoint(f"w{n + 1}", pt, sources) for n, (pt, _, sources) in enumerate(collapsed)]
    matrix = np.zeros((len(endpoints), len(pairs)), dtype=np.int8)
    covered, flows = [], []
    for w, ep in enumerate(endpoints):
        s = []
        for q_idx, q in enumerate(pairs):
            if covers(network, table, ep.location, q, radius):
                matrix[w, q_idx] = 1
                s.append(q)
        covered.append(s)
        flows.append(covered_flow(s))
    return EndpointCatalog(network, list(pairs), endpoints, covered, flows, matrix, list(existing))


def _location_key(pt: NetworkPoint) -> tuple:
    if pt.is_vertex:
        return ("v", pt.vertex)
    return ("e", pt.edge, round(pt.offset, 9))

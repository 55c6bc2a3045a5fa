"""Routable street graph, shortest routes and the edge predicates used for network selection."""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Iterable, Mapping, Protocol, Sequence

import numpy as np
import shapely
import shapely.ops
from shapely.geometry import LineString, Point

from .errors import DataError, EmptyGraphError, NoRouteError
from .geo import LocalProjection, bearing
from .ingest import Way, parse_network_json

log = logging.getLogger(__name__)

# highway tag -> street type value; lower value = higher in the hierarchy
HIGHWAY_TYPES = {
    "motorway": 10,
    "trunk": 10,
    "motorway_link": 10,
    "trunk_link": 10,
    "primary": 20,
    "primary_link": 20,
    "secondary": 30,
    "secondary_link": 30,
    "tertiary": 40,
    "tertiary_link": 40,
    "residential": 50,
    "unclassified": 50,
    "living_street": 50,
}
STREET_TYPE_VALUES = (10, 20, 30, 40, 50)


def hierarchy_weight(type_value: int) -> int:
    """Invert the street type so that larger means more important (highway 50 ... residential 10)."""
    return 60 - type_value


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    street_type: int
    coords: tuple[tuple[float, float], ...]
    lonlat: tuple[tuple[float, float], ...]
    length: float
    roundabout: bool = False
    name: str | None = None

    @property
    def hierarchy_weight(self) -> int:
        return hierarchy_weight(self.street_type)

    @cached_property
    def line(self) -> LineString:
        return LineString(self.coords)

    def other(self, vertex: str) -> str:
        return self.v if vertex == self.u else self.u

    def oriented_coords(self, start: str) -> tuple[tuple[float, float], ...]:
        return self.coords if start == self.u else self.coords[::-1]


EdgeWeight = Callable[[Edge], float]


def default_edge_weight(edge: Edge) -> float:
    return edge.hierarchy_weight


class StreetGraph:
    """Undirected street graph in the local metric frame.

    Treat instances as immutable after :func:`build_graph`; they can then be
    shared between any number of route queries.
    """

    def __init__(self, projection: LocalProjection):
        self.projection = projection
        self.vertices: dict[str, tuple[float, float]] = {}
        self.vertex_lonlat: dict[str, tuple[float, float]] = {}
        self.edges: dict[str, Edge] = {}
        self.incident: dict[str, list[str]] = {}

    def _add_vertex(self, vid: str, lon: float, lat: float) -> None:
        if vid not in self.vertices:
            self.vertex_lonlat[vid] = (lon, lat)
            self.vertices[vid] = self.projection.project_point(lon, lat)
            self.incident[vid] = []

    def _add_edge(self, edge: Edge) -> None:
        if edge.id in self.edges:
            raise DataError(f"duplicate edge id {edge.id}")
        self.edges[edge.id] = edge
        self.incident[edge.u].append(edge.id)
        if edge.v != edge.u:
            self.incident[edge.v].append(edge.id)

    def degree(self, vertex: str) -> int:
        return len(self.incident[vertex])

    def incident_edges(self, vertex: str) -> list[Edge]:
        return [self.edges[e] for e in self.incident[vertex]]

    def __len__(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_ids(self) -> list[str]:
        return list(self.edges)

    @cached_property
    def edge_lines(self) -> np.ndarray:
        return np.array([self.edges[e].line for e in self.edge_ids], dtype=object)

    @cached_property
    def edge_tree(self) -> shapely.STRtree:
        return shapely.STRtree(self.edge_lines)

    def edges_within(self, geom, distance: float) -> list[str]:
        """Ids of edges any part of which lies within ``distance`` of ``geom`` (inclusive)."""
        idx = self.edge_tree.query(geom, predicate="dwithin", distance=distance)
        return [self.edge_ids[i] for i in sorted(idx.tolist())]

    def nearest_vertex(self, x: float, y: float) -> tuple[str, float]:
        ids = list(self.vertices)
        arr = np.array([self.vertices[v] for v in ids])
        d = np.hypot(arr[:, 0] - x, arr[:, 1] - y)
        i = int(np.argmin(d))
        return ids[i], float(d[i])

    def nearest_vertex_lonlat(self, lon: float, lat: float) -> tuple[str, float]:
        return self.nearest_vertex(*self.projection.project_point(lon, lat))


def build_graph(ways: Iterable[Way], projection: LocalProjection | None = None) -> StreetGraph:
    """Build the street graph from highway ways.

    Ways whose highway value has no street type are dropped.  Ways are split at
    every node they share with another kept way (and at repeated nodes), so
    edges meet only at vertices.  A way that yields one piece keeps its id;
    otherwise pieces are numbered ``<way id>:<k>``.
    """
    kept = []
    for w in ways:
        t = HIGHWAY_TYPES.get(w.tags.get("highway", ""))
        if t is None:
            continue
        nodes = [n for i, n in enumerate(w.nodes) if i == 0 or n[0] != w.nodes[i - 1][0]]
        if len(nodes) >= 2:
            kept.append((w, t, nodes))
    if not kept:
        raise EmptyGraphError("no way with a routable highway type")
    if projection is None:
        projection = LocalProjection.centered_on((n[1], n[2]) for _, _, ns in kept for n in ns)

    usage: dict[str, int] = {}
    for _, _, nodes in kept:
        for n in nodes:
            usage[n[0]] = usage.get(n[0], 0) + 1

    g = StreetGraph(projection)
    for w, t, nodes in kept:
        cuts = {0, len(nodes) - 1}
        cuts.update(i for i, n in enumerate(nodes) if usage[n[0]] > 1)
        if nodes[0][0] == nodes[-1][0] and len(nodes) > 2:
            cuts.add(len(nodes) // 2)  # avoid a self-loop edge on closed ways
        cuts = sorted(cuts)
        pieces = list(zip(cuts[:-1], cuts[1:]))
        for k, (i, j) in enumerate(pieces):
            seg = nodes[i : j + 1]
            lonlat = tuple((n[1], n[2]) for n in seg)
            xs, ys = projection.forward([p[0] for p in lonlat], [p[1] for p in lonlat])
            coords = tuple(zip(xs.tolist(), ys.tolist()))
            length = LineString(coords).length
            if length <= 0:
                log.warning("zero-length piece of way %s dropped", w.id)
                continue
            g._add_vertex(seg[0][0], seg[0][1], seg[0][2])
            g._add_vertex(seg[-1][0], seg[-1][1], seg[-1][2])
            g._add_edge(
                Edge(
                    id=w.id if len(pieces) == 1 else f"{w.id}:{k}",
                    u=seg[0][0],
                    v=seg[-1][0],
                    street_type=t,
                    coords=coords,
                    lonlat=lonlat,
                    length=length,
                    roundabout=w.tags.get("junction") == "roundabout",
                    name=w.tags.get("name"),
                )
            )
    if not g.edges:
        raise EmptyGraphError("no edge with positive length")
    return g


def graph_to_json(graph: StreetGraph) -> dict[str, Any]:
    """Serialize to the synthetic-network JSON schema (vertices and typed edges)."""
    used = []
    for e in graph.edges.values():
        used += [e.u, e.v]
    return {
        "vertices": [
            {"id": v, "lon": graph.vertex_lonlat[v][0], "lat": graph.vertex_lonlat[v][1]}
            for v in dict.fromkeys(used)
        ],
        "edges": [
            {
                "id": e.id,
                "from": e.u,
                "to": e.v,
                "type": e.street_type,
                "geometry": [list(p) for p in e.lonlat],
                "tags": {k: v for k, v in (("junction", "roundabout" if e.roundabout else None), ("name", e.name)) if v},
            }
            for e in graph.edges.values()
        ],
    }


def graph_from_json(doc: Mapping[str, Any] | str, projection: LocalProjection | None = None) -> StreetGraph:
    return build_graph(parse_network_json(doc).ways, projection)


# -------------------------------------------------------------------- predicates


def connected(x: Edge, y: Edge) -> bool:
    """True iff the two edges share an endpoint (so every edge is connected to itself)."""
    return x.u in (y.u, y.v) or x.v in (y.u, y.v)


def weight_connected(x: Edge, y: Edge, weight: EdgeWeight = default_edge_weight) -> bool:
    return connected(x, y) and weight(x) >= weight(y)


# ------------------------------------------------------------------------ routes


@dataclass(frozen=True)
class Route:
    """A directed path s -> t through the graph, in the local metric frame."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    line: LineString
    cumulative: tuple[float, ...]  # metres from s at each route vertex
    _seg_cum: np.ndarray = field(repr=False, compare=False)

    @property
    def s(self) -> str:
        return self.vertices[0]

    @property
    def t(self) -> str:
        return self.vertices[-1]

    @property
    def length(self) -> float:
        return self.cumulative[-1]

    @cached_property
    def edge_ids(self) -> frozenset[str]:
        return frozenset(e.id for e in self.edges)

    @classmethod
    def from_path(cls, graph: StreetGraph, vertices: Sequence[str], edges: Sequence[Edge]) -> "Route":
        if len(edges) != len(vertices) - 1:
            raise ValueError("a route needs exactly one edge between consecutive vertices")
        coords = [graph.vertices[vertices[0]]]
        cum = [0.0]
        for a, b, e in zip(vertices[:-1], vertices[1:], edges):
            if {a, b} != {e.u, e.v}:
                raise ValueError(f"edge {e.id} does not join {a} and {b}")
            coords.extend(e.oriented_coords(a)[1:])
            cum.append(cum[-1] + e.length)
        if len(coords) == 1:
            coords.append(coords[0])
        arr = np.asarray(coords)
        seg = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(arr, axis=0).T))])
        return cls(tuple(vertices), tuple(edges), LineString(coords), tuple(cum), seg)

    def point_at(self, distance: float) -> Point:
        return self.line.interpolate(min(max(distance, 0.0), self.length))

    def locate(self, geom) -> float:
        """Arc-length position of the route point nearest to ``geom``."""
        nearest = shapely.ops.nearest_points(self.line, geom)[0]
        return float(self.line.project(nearest))

    def bearing_at(self, distance: float) -> float:
        """Travel bearing at an arc position: the segment starting there, or the final segment at t."""
        coords = self.line.coords
        seg = self._seg_cum
        n = len(seg) - 1
        if seg[-1] == 0:
            return 0.0
        i = min(max(int(np.searchsorted(seg, distance, side="right")) - 1, 0), n - 1)
        nonzero = [k for k in range(n) if seg[k + 1] > seg[k]]
        ahead = [k for k in nonzero if k >= i]
        i = ahead[0] if ahead else nonzero[-1]
        return bearing(coords[i], coords[i + 1])


class RouteFinder(Protocol):
    def __call__(self, graph: StreetGraph, s: str, t: str) -> Route: ...


def shortest_route(graph: StreetGraph, s: str, t: str, cost: Callable[[Edge], float] | None = None) -> Route:
    """Dijkstra over edge lengths (or ``cost``).  Ties resolve deterministically by vertex id."""
    for v in (s, t):
        if v not in graph.vertices:
            raise DataError(f"vertex {v} not in graph")
    cost = cost or (lambda e: e.length)
    dist = {s: 0.0}
    prev: dict[str, tuple[str, Edge]] = {}
    done = set()
    heap = [(0.0, s)]
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == t:
            break
        for eid in graph.incident[v]:
            e = graph.edges[eid]
            w = e.other(v)
            nd = d + cost(e)
            if nd < dist.get(w, float("inf")):
                dist[w] = nd
                prev[w] = (v, e)
                heapq.heappush(heap, (nd, w))
    if t not in done:
        raise NoRouteError(f"no route from {s} to {t}")
    verts, edges = [t], []
    while verts[-1] != s:
        v, e = prev[verts[-1]]
        edges.append(e)
        verts.append(v)
    return Route.from_path(graph, verts[::-1], edges[::-1])


def route_between(graph: StreetGraph, start_lonlat, end_lonlat, finder: RouteFinder = shortest_route) -> Route:
    """Route between the graph vertices nearest to two lon/lat positions."""
    s, ds = graph.nearest_vertex_lonlat(*start_lonlat)
    t, dt = graph.nearest_vertex_lonlat(*end_lonlat)
    log.info("route endpoints snapped to %s (%.1f m) and %s (%.1f m)", s, ds, t, dt)
    return finder(graph, s, t)


def snap_route(graph: StreetGraph, lonlats: Sequence[Sequence[float]], tolerance: float = 10.0) -> Route:
    """Turn an externally computed lon/lat polyline into a graph route.

    Positions within ``tolerance`` metres of a vertex become waypoints; the
    first and last position must snap.  Consecutive waypoints are joined by
    their shortest connection.
    """
    waypoints: list[str] = []
    for i, (lon, lat) in enumerate(lonlats):
        vid, d = graph.nearest_vertex_lonlat(lon, lat)
        if d > tolerance:
            if i in (0, len(lonlats) - 1):
                raise DataError(f"route endpoint {lon},{lat} is {d:.1f} m from the graph (tolerance {tolerance} m)")
            continue
        if not waypoints or waypoints[-1] != vid:
            waypoints.append(vid)
    verts, edges = [waypoints[0]], []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        leg = shortest_route(graph, a, b)
        verts.extend(leg.vertices[1:])
        edges.extend(leg.edges)
    return Route.from_path(graph, verts, edges)

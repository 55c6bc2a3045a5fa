"""Selecting the street network relevant to a route context.

Four operators, each returning a subset of the graph's edges: a buffer around
the current location, topological depth from the route, weighted depth (only
paths that never climb the hierarchy), and the network skeleton.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from shapely.geometry import Point

from .netgraph import EdgeWeight, Route, StreetGraph, default_edge_weight

UNREACHABLE = math.inf


def buffer_network(graph: StreetGraph, location: Point, max_distance: float) -> set[str]:
    """Edges any part of which lies within ``max_distance`` metres of ``location``."""
    if max_distance <= 0:
        raise ValueError("max_distance must be positive")
    return set(graph.edges_within(location, max_distance))


def _bfs(graph: StreetGraph, sources: Iterable[str], step_ok=None) -> dict[str, int]:
    """Multi-source BFS over edge adjacency (edges adjacent iff they share a vertex).

    ``step_ok(frm, to)`` filters moves from an already labelled edge ``frm`` to a
    neighbour ``to``.
    """
    depth: dict[str, int] = {}
    queue: deque[str] = deque()
    for s in sources:
        if s not in depth:
            depth[s] = 0
            queue.append(s)
    edges = graph.edges
    while queue:
        eid = queue.popleft()
        e = edges[eid]
        d = depth[eid] + 1
        for vert in (e.u, e.v):
            for nid in graph.incident[vert]:
                if nid in depth:
                    continue
                if step_ok is not None and not step_ok(e, edges[nid]):
                    continue
                depth[nid] = d
                queue.append(nid)
    return depth


def depths(graph: StreetGraph, route: Route) -> dict[str, int]:
    """Topological depth of every edge reachable from the route (route edges have depth 0)."""
    return _bfs(graph, sorted(route.edge_ids))


def depth(edge: str, route: Route, graph: StreetGraph) -> float:
    """Fewest edge-adjacency hops from ``edge`` to any route edge; ``UNREACHABLE`` if disconnected."""
    return depths(graph, route).get(edge, UNREACHABLE)


def select_depth(graph: StreetGraph, route: Route, n: int) -> set[str]:
    if n < 0:
        raise ValueError("n must be >= 0")
    return {e for e, d in depths(graph, route).items() if d <= n}


def weighted_depths(
    graph: StreetGraph,
    route: Route,
    weight: EdgeWeight = default_edge_weight,
    endpoint_only: bool = False,
) -> dict[str, int]:
    """Weighted depth of every edge that has one.

    Strict reading (default): the hop count of the shortest path from the edge
    to a route edge along which ``weight`` never increases, i.e. every step is
    ``weight_connected``.  With ``endpoint_only`` any path counts, provided the
    route edge it ends on is no heavier than the starting edge.
    """
    route_ids = sorted(route.edge_ids)
    if not endpoint_only:
        # searching outward from the route, a step frm -> to is the reverse of
        # weight_connected(to, frm)
        return _bfs(graph, route_ids, lambda frm, to: weight(to) >= weight(frm))

    route_weights = sorted({weight(graph.edges[e]) for e in route_ids})
    layers = {
        w: _bfs(graph, [e for e in route_ids if weight(graph.edges[e]) <= w]) for w in route_weights
    }
    out = {}
    for eid, e in graph.edges.items():
        we = weight(e)
        usable = [w for w in route_weights if w <= we]
        if not usable:
            continue
        d = layers[usable[-1]].get(eid)
        if d is not None:
            out[eid] = d
    return out


def weight_depth(
    edge: str,
    route: Route,
    graph: StreetGraph,
    weight: EdgeWeight = default_edge_weight,
    endpoint_only: bool = False,
) -> float:
    return weighted_depths(graph, route, weight, endpoint_only).get(edge, UNREACHABLE)


def select_weighted_depth(
    graph: StreetGraph,
    route: Route,
    n: int,
    weight: EdgeWeight = default_edge_weight,
    endpoint_only: bool = False,
) -> set[str]:
    if n < 0:
        raise ValueError("n must be >= 0")
    return {e for e, d in weighted_depths(graph, route, weight, endpoint_only).items() if d <= n}


def network_skeleton(graph: StreetGraph, w: float, weight: EdgeWeight = default_edge_weight) -> set[str]:
    """All edges with ``weight(e) >= w``."""
    return {eid for eid, e in graph.edges.items() if weight(e) >= w}


@dataclass(frozen=True)
class EdgeAnnotation:
    depth: int | None
    weighted_depth: int | None
    in_skeleton: bool
    in_buffer: bool
    on_route: bool


@dataclass(frozen=True)
class NetworkSelection:
    edges: dict[str, EdgeAnnotation]

    def __contains__(self, edge_id: str) -> bool:
        return edge_id in self.edges

    def __len__(self) -> int:
        return len(self.edges)


def select_network(
    graph: StreetGraph,
    route: Route,
    location: Point,
    max_distance: float,
    depth_n: int | None = None,
    weighted_depth_n: int | None = None,
    skeleton_w: float | None = None,
    weight: EdgeWeight = default_edge_weight,
    weighted_depth_endpoint_only: bool = False,
    _depths: dict[str, int] | None = None,
    _wdepths: dict[str, int] | None = None,
) -> NetworkSelection:
    """Combine the operators for one context.

    The result is every route edge plus the buffered edges picked by at least
    one enabled operator (depth <= n, weighted depth <= n, skeleton).  With no
    operator enabled the whole buffer is kept.
    """
    buf = buffer_network(graph, location, max_distance)
    dmap = _depths if _depths is not None else depths(graph, route)
    wmap = (
        _wdepths
        if _wdepths is not None
        else weighted_depths(graph, route, weight, weighted_depth_endpoint_only)
    )
    skel = network_skeleton(graph, skeleton_w, weight) if skeleton_w is not None else set()

    enabled = depth_n is not None or weighted_depth_n is not None or skeleton_w is not None
    chosen = set(route.edge_ids)
    for eid in buf:
        if not enabled:
            chosen.add(eid)
        elif depth_n is not None and dmap.get(eid, UNREACHABLE) <= depth_n:
            chosen.add(eid)
        elif weighted_depth_n is not None and wmap.get(eid, UNREACHABLE) <= weighted_depth_n:
            chosen.add(eid)
        elif eid in skel:
            chosen.add(eid)

    return NetworkSelection(
        {
            eid: EdgeAnnotation(
                depth=dmap.get(eid),
                weighted_depth=wmap.get(eid),
                in_skeleton=eid in skel,
                in_buffer=eid in buf,
                on_route=eid in route.edge_ids,
            )
            for eid in graph.edge_ids
            if eid in chosen
        }
    )

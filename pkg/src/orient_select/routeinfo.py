"""Route analysis: decision points, reference segments and the hierarchy profile."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from shapely.geometry import LineString
from shapely.ops import substring

from .geo import angle_diff, bearing
from .netgraph import Edge, Route, StreetGraph

START_DESTINATION = 0
STRAIGHT_ON = 1
TURN_NOT_AT_JUNCTION = 2
TURN_AT_T_JUNCTION = 3
TURN_AT_JUNCTION = 4
TURN_AT_ROUNDABOUT = 5
HIGHWAY_RAMP = 6

DP_CLASS_NAMES = {
    START_DESTINATION: "start/destination",
    STRAIGHT_ON: "straight on",
    TURN_NOT_AT_JUNCTION: "turn not at a junction",
    TURN_AT_T_JUNCTION: "turn at a t-junction",
    TURN_AT_JUNCTION: "turn at a junction",
    TURN_AT_ROUNDABOUT: "turn at a roundabout",
    HIGHWAY_RAMP: "highway ramp/exit",
}

DEFAULT_TURN_THRESHOLD_DEG = 30.0
DEFAULT_REF_LEN_M = 50.0


@dataclass(frozen=True)
class DecisionPoint:
    vertex: str
    index: int  # position of the vertex in route.vertices
    distance: float  # metres from the route start
    dp_class: int
    approach_bearing: float
    exit_bearing: float
    reference_segment: LineString
    ref_start: float
    ref_end: float

    @property
    def deflection_deg(self) -> float:
        return angle_diff(self.approach_bearing, self.exit_bearing)


class ProfileEntry(NamedTuple):
    edge_id: str
    street_type: int
    start: float
    end: float  # cumulative distance at the end of the edge


def _approach_bearing(edge: Edge, vertex: str) -> float:
    c = edge.oriented_coords(edge.other(vertex))
    return bearing(c[-2], c[-1])


def _exit_bearing(edge: Edge, vertex: str) -> float:
    c = edge.oriented_coords(vertex)
    return bearing(c[0], c[1])


def classify_vertex(
    graph: StreetGraph,
    vertex: str,
    in_edge: Edge,
    out_edge: Edge,
    turn_threshold_deg: float = DEFAULT_TURN_THRESHOLD_DEG,
) -> int | None:
    """Decision-point class of an interior route vertex, or None if it is not one.

    Rules are tried from most to least specific: highway ramp, roundabout,
    turns by vertex degree, straight-on crossing.
    """
    incident = graph.incident_edges(vertex)
    degree = len(incident)
    deflection = angle_diff(_approach_bearing(in_edge, vertex), _exit_bearing(out_edge, vertex))
    turning = deflection > turn_threshold_deg

    if any(e.street_type == 10 for e in (in_edge, out_edge)):
        if degree > 2 or len({e.street_type for e in incident}) > 1:
            return HIGHWAY_RAMP
    if any(e.roundabout for e in incident):
        return TURN_AT_ROUNDABOUT
    if turning:
        if degree == 2:
            return TURN_NOT_AT_JUNCTION
        if degree == 3:
            return TURN_AT_T_JUNCTION
        if degree >= 4:
            return TURN_AT_JUNCTION
        return None
    route_weight = max(in_edge.hierarchy_weight, out_edge.hierarchy_weight)
    others = [e for e in incident if e.id not in (in_edge.id, out_edge.id)]
    if any(e.hierarchy_weight >= route_weight for e in others):
        return STRAIGHT_ON
    return None


def reference_interval(route: Route, distance: float, ref_len_m: float = DEFAULT_REF_LEN_M) -> tuple[float, float]:
    return max(0.0, distance - ref_len_m), min(route.length, distance + ref_len_m)


def reference_segment(route: Route, dp: DecisionPoint | float, ref_len_m: float = DEFAULT_REF_LEN_M) -> LineString:
    """Part of the route within ``ref_len_m`` (arc length) before and after the decision point."""
    if ref_len_m <= 0:
        raise ValueError("ref_len_m must be positive")
    d = dp.distance if isinstance(dp, DecisionPoint) else float(dp)
    a, b = reference_interval(route, d, ref_len_m)
    seg = substring(route.line, a, b)
    if seg.geom_type == "Point":
        seg = LineString([seg.coords[0], seg.coords[0]])
    return seg


def classify_decision_points(
    route: Route,
    graph: StreetGraph,
    turn_threshold_deg: float = DEFAULT_TURN_THRESHOLD_DEG,
    ref_len_m: float = DEFAULT_REF_LEN_M,
) -> list[DecisionPoint]:
    if turn_threshold_deg <= 0:
        raise ValueError("turn_threshold_deg must be positive")
    verts = route.vertices
    edges = route.edges

    def make(i: int, cls: int, approach: float, exit_: float) -> DecisionPoint:
        d = route.cumulative[i]
        a, b = reference_interval(route, d, ref_len_m)
        return DecisionPoint(verts[i], i, d, cls, approach, exit_, reference_segment(route, d, ref_len_m), a, b)

    if not edges:
        return [make(0, START_DESTINATION, 0.0, 0.0)]

    first = _exit_bearing(edges[0], verts[0])
    dps = [make(0, START_DESTINATION, first, first)]
    for i in range(1, len(verts) - 1):
        cls = classify_vertex(graph, verts[i], edges[i - 1], edges[i], turn_threshold_deg)
        if cls is not None:
            dps.append(
                make(i, cls, _approach_bearing(edges[i - 1], verts[i]), _exit_bearing(edges[i], verts[i]))
            )
    last = _approach_bearing(edges[-1], verts[-1])
    dps.append(make(len(verts) - 1, START_DESTINATION, last, last))
    return dps


def hierarchy_profile(route: Route) -> list[ProfileEntry]:
    return [
        ProfileEntry(e.id, e.street_type, route.cumulative[i], route.cumulative[i + 1])
        for i, e in enumerate(route.edges)
    ]

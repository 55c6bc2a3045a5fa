"""Context-dependent salience of orientation-information candidates.

Six core metrics are combined into one score per candidate::

    S = B * (w_s*S_c + w_r*R + w_u*U + w_d*D + w_o*O)

B gates on distance to the current location, S_c is the category weight, R
rewards candidates at decision points, U penalises repeated categories, D
decays linearly with distance to the route and O prefers candidates ahead.
Connection and coverage can extend the weighted sum; their weights are then
renormalised together with the core weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import shapely
from shapely.geometry import Point, box
from shapely.geometry.base import BaseGeometry
from shapely.ops import nearest_points

from .errors import ConfigError
from .geo import angle_diff, bearing, outline
from .ingest import FeatureCandidate
from .netgraph import Route, StreetGraph
from .routeinfo import DecisionPoint

FRONT_MAX_DEG = 45.0
BACK_MIN_DEG = 135.0
CONNECTION_TOLERANCE_M = 5.0
COVERAGE_CUTOFF = 0.95
_BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class FunctionalScale:
    name: str
    max_distance: float
    category_weights: Mapping[str, float] = field(default_factory=dict)
    depth: int | None = None
    weighted_depth: int | None = None
    skeleton: float | None = None
    map_extent: tuple[float, float] | None = None  # width, height in metres; default 2*max_distance square
    ref_len_m: float | None = None

    def __post_init__(self):
        if not self.max_distance > 0:
            raise ConfigError(f"scale {self.name}: max_distance must be > 0")
        for k, v in self.category_weights.items():
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"scale {self.name}: weight for {k} outside [0, 1]")
        if self.map_extent is not None and min(self.map_extent) <= 0:
            raise ConfigError(f"scale {self.name}: map_extent must be positive")

    @property
    def extent_size(self) -> tuple[float, float]:
        if self.map_extent is not None:
            return tuple(self.map_extent)
        return (2 * self.max_distance, 2 * self.max_distance)


@dataclass(frozen=True)
class MetricWeights:
    """Weights of the core metrics (must be positive and sum to 1) and the optional extended ones.

    A zero extended weight disables that metric.
    """

    category: float = 0.2
    relation: float = 0.2
    uniqueness: float = 0.2
    distance: float = 0.2
    direction: float = 0.2
    connection: float = 0.0
    coverage: float = 0.0

    def __post_init__(self):
        core = self.core
        if any(not (w > 0) for w in core):
            raise ConfigError(f"core metric weights must all be > 0, got {core}")
        if abs(sum(core) - 1.0) > 1e-9:
            raise ConfigError(f"core metric weights must sum to 1, got {sum(core)!r}")
        if self.connection < 0 or self.coverage < 0:
            raise ConfigError("extended metric weights must be >= 0")

    @property
    def core(self) -> tuple[float, float, float, float, float]:
        return (self.category, self.relation, self.uniqueness, self.distance, self.direction)

    @classmethod
    def normalized(cls, category, relation, uniqueness, distance, direction, connection=0.0, coverage=0.0):
        """Scale the core weights to sum to 1 (extended weights scale along).

        Weights are snapped to 1e-12 so that proportional inputs give identical weights.
        """
        total = category + relation + uniqueness + distance + direction
        if not total > 0:
            raise ConfigError("core metric weights must be positive")
        snap = lambda w: round(w / total, 12)
        return cls(
            snap(category), snap(relation), snap(uniqueness), snap(distance), snap(direction),
            snap(connection), snap(coverage),
        )


@dataclass(frozen=True)
class Context:
    """Where the user is on the route and at which functional scale the map is shown."""

    route: Route
    position: float  # metres from the route start
    location: Point
    travel_bearing: float
    scale: FunctionalScale
    decision_points: tuple[DecisionPoint, ...] = ()
    front_max_deg: float = FRONT_MAX_DEG
    back_min_deg: float = BACK_MIN_DEG

    @classmethod
    def at_fraction(
        cls,
        route: Route,
        fraction: float,
        scale: FunctionalScale,
        decision_points: Sequence[DecisionPoint] = (),
        **kw,
    ) -> "Context":
        if not 0.0 <= fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        pos = fraction * route.length
        return cls(route, pos, route.point_at(pos), route.bearing_at(pos), scale, tuple(decision_points), **kw)

    @property
    def extent(self) -> BaseGeometry:
        w, h = self.scale.extent_size
        x, y = self.location.x, self.location.y
        return box(x - w / 2, y - h / 2, x + w / 2, y + h / 2)


@dataclass(frozen=True)
class SalienceBreakdown:
    buffer: int
    category: float
    relation: float
    uniqueness: float
    distance: float
    direction: float
    total: float
    dist_to_route: float
    dist_to_location: float
    connection: float | None = None
    coverage: float | None = None


def _xy(candidate: FeatureCandidate) -> BaseGeometry:
    if candidate.xy is None:
        raise ValueError(f"candidate {candidate.id} has no projected geometry; call .projected() first")
    return candidate.xy


def metric_buffer(candidate: FeatureCandidate, context: Context) -> int:
    return 1 if _xy(candidate).distance(context.location) <= context.scale.max_distance else 0


def metric_category(candidate: FeatureCandidate, context: Context) -> float:
    """Scale override for the category (``key=value``, then ``key=*``, then ``key``), else the rule weight."""
    overrides = context.scale.category_weights
    key = candidate.category.partition("=")[0]
    for k in (candidate.category, f"{key}=*", key):
        if k in overrides:
            return float(overrides[k])
    return candidate.category_weight


def distance_to_route(candidate: FeatureCandidate, route: Route) -> float:
    """Planar distance from the route; lines and areas are measured on their perimeter."""
    return float(route.line.distance(outline(_xy(candidate))))


def metric_relation(candidate: FeatureCandidate, route: Route, decision_points: Sequence[DecisionPoint]) -> float:
    """1 if the candidate's nearest route point falls on a reference segment (ends inclusive), else 0.5."""
    pos = route.locate(outline(_xy(candidate)))
    for dp in decision_points:
        if dp.ref_start - _BOUNDARY_EPS <= pos <= dp.ref_end + _BOUNDARY_EPS:
            return 1.0
    return 0.5


def metric_uniqueness(candidate: FeatureCandidate, candidate_set: Sequence[FeatureCandidate]) -> float:
    n = sum(1 for c in candidate_set if c.category == candidate.category)
    if not any(c.id == candidate.id for c in candidate_set):
        n += 1
    return 1.0 / n


def metric_distance(candidate: FeatureCandidate, route: Route, context: Context) -> float:
    """1 - dist/MD, clamped to [0, 1]."""
    d = distance_to_route(candidate, route)
    return min(1.0, max(0.0, 1.0 - d / context.scale.max_distance))


def direction_angle(candidate: FeatureCandidate, context: Context) -> float:
    """Angle between the travel bearing and the bearing to the candidate's nearest point."""
    target = nearest_points(outline(_xy(candidate)), context.location)[0]
    loc = context.location
    if target.distance(loc) == 0.0:
        return 0.0  # candidate at the location itself counts as ahead
    return angle_diff(context.travel_bearing, bearing((loc.x, loc.y), (target.x, target.y)))


def metric_direction(candidate: FeatureCandidate, context: Context) -> float:
    theta = direction_angle(candidate, context)
    if theta <= context.front_max_deg:
        return 1.0
    if theta >= context.back_min_deg:
        return 0.1
    return 0.5


def metric_connection(
    candidate: FeatureCandidate,
    graph: StreetGraph,
    route: Route,
    reachable: set[str] | frozenset[str] | None = None,
    tolerance: float = CONNECTION_TOLERANCE_M,
) -> float:
    """1 when the candidate touches the route (within ``tolerance``), 0.5 when it touches a street
    reachable from the route, 0 otherwise.

    ``reachable`` is the set of edge ids connected to the route; computed when omitted.
    """
    geom = _xy(candidate)
    if geom.distance(route.line) <= tolerance:
        return 1.0
    near = graph.edges_within(geom, tolerance)
    if not near:
        return 0.0
    if reachable is None:
        from .netselect import depths

        reachable = set(depths(graph, route))
    return 0.5 if any(e in reachable for e in near) else 0.0


def metric_coverage(region: FeatureCandidate, map_extent: BaseGeometry) -> float:
    """Fraction of the map extent covered by the region; 0 when it covers (almost) all of it."""
    area = map_extent.area
    if area <= 0:
        return 0.0
    frac = _xy(region).intersection(map_extent).area / area
    return 0.0 if frac >= COVERAGE_CUTOFF else frac


def _combine(weights: MetricWeights, b: int, core: Sequence[float], extra: Sequence[tuple[float, float]]) -> float:
    s = sum(w * m for w, m in zip(weights.core, core))
    norm = 1.0
    for w, m in extra:
        s += w * m
        norm += w
    return b * (s / norm)


def overall_salience(
    candidate: FeatureCandidate,
    context: Context,
    weights: MetricWeights,
    candidate_set: Sequence[FeatureCandidate],
    graph: StreetGraph | None = None,
    reachable: set[str] | None = None,
) -> SalienceBreakdown:
    """All metrics of one candidate plus the combined score.

    ``candidate_set`` is the set uniqueness is counted over (normally the
    candidates inside this context's buffer).  Connection needs ``graph``;
    coverage applies to regions only.
    """
    if not isinstance(weights, MetricWeights):
        raise ConfigError("weights must be a MetricWeights instance")
    route = context.route
    geom = _xy(candidate)
    d_loc = float(geom.distance(context.location))
    d_route = distance_to_route(candidate, route)
    b = 1 if d_loc <= context.scale.max_distance else 0
    core = (
        metric_category(candidate, context),
        metric_relation(candidate, route, context.decision_points),
        metric_uniqueness(candidate, candidate_set),
        min(1.0, max(0.0, 1.0 - d_route / context.scale.max_distance)),
        metric_direction(candidate, context),
    )
    extra = []
    connection = coverage = None
    if weights.connection > 0:
        if graph is None:
            raise ConfigError("the connection metric needs the street graph")
        connection = metric_connection(candidate, graph, route, reachable)
        extra.append((weights.connection, connection))
    if weights.coverage > 0 and candidate.is_region:
        coverage = metric_coverage(candidate, context.extent)
        extra.append((weights.coverage, coverage))
    return SalienceBreakdown(
        buffer=b,
        category=core[0],
        relation=core[1],
        uniqueness=core[2],
        distance=core[3],
        direction=core[4],
        total=_combine(weights, b, core, extra),
        dist_to_route=d_route,
        dist_to_location=d_loc,
        connection=connection,
        coverage=coverage,
    )


def in_buffer(candidates: Sequence[FeatureCandidate], context: Context) -> list[FeatureCandidate]:
    """Candidates within the context's buffer distance of the location, in input order."""
    if not candidates:
        return []
    geoms = np.array([_xy(c) for c in candidates], dtype=object)
    d = shapely.distance(geoms, context.location)
    return [c for c, di in zip(candidates, d) if di <= context.scale.max_distance]


def rank_candidates(
    candidate_set: Sequence[FeatureCandidate],
    context: Context,
    weights: MetricWeights,
    k: int | None = None,
    graph: StreetGraph | None = None,
    reachable: set[str] | None = None,
) -> list[tuple[FeatureCandidate, SalienceBreakdown]]:
    """Score the buffered candidates and return the top ``k`` (all when None).

    Order: salience descending, then distance to the route, then id.
    Candidates with zero salience are left out.
    """
    if k is not None and k < 1:
        raise ValueError("k must be >= 1")
    population = in_buffer(candidate_set, context)
    scored = []
    for c in population:
        br = overall_salience(c, context, weights, population, graph, reachable)
        if br.total > 0:
            scored.append((c, br))
    scored.sort(key=lambda cb: (-cb[1].total, cb[1].dist_to_route, cb[0].id))
    return scored if k is None else scored[:k]

"""End-to-end workflow: analyse the route, select the network, select and rank candidates.

A run is driven by one JSON config.  Every context gets its own output
directory with four GeoJSON files; a manifest recording all effective
parameters sits next to them and can itself be used as a config.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from shapely.geometry import mapping
from shapely.geometry.polygon import orient

from .errors import ConfigError, DataError, OrientSelectError, PipelineError
from .geo import LocalProjection
from .ingest import FeatureCandidate, MapData, apply_tag_rules, load_map, load_tag_rules, merge_fragments
from .netgraph import Route, StreetGraph, build_graph, route_between, snap_route
from .netselect import NetworkSelection, depths, select_network, weighted_depths
from .routeinfo import (
    DEFAULT_REF_LEN_M,
    DEFAULT_TURN_THRESHOLD_DEG,
    DP_CLASS_NAMES,
    DecisionPoint,
    classify_decision_points,
    hierarchy_profile,
)
from .salience import Context, FunctionalScale, MetricWeights, SalienceBreakdown, rank_candidates

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1
OUTPUT_FILES = ("network.geojson", "candidates_ranked.geojson", "decision_points.geojson", "route.geojson")
COORD_DECIMALS = 7
VALUE_DECIMALS = 6
_NAME_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


@dataclass(frozen=True)
class ContextSpec:
    name: str
    fraction: float
    scale: str


@dataclass
class PipelineConfig:
    data: Path
    scales: dict[str, FunctionalScale]
    contexts: list[ContextSpec]
    route_from: tuple[float, float] | None = None
    route_to: tuple[float, float] | None = None
    route_file: Path | None = None
    tag_rules: Path | None = None
    weights: MetricWeights = field(default_factory=MetricWeights)
    premerge: bool = False
    turn_threshold_deg: float = DEFAULT_TURN_THRESHOLD_DEG
    ref_len_m: float = DEFAULT_REF_LEN_M
    weighted_depth_endpoint_only: bool = False
    route_snap_tolerance_m: float = 10.0
    top_k: int | None = None
    origin: tuple[float, float] | None = None
    output_dir: Path = Path("out")

    def to_dict(self) -> dict[str, Any]:
        w = self.weights
        return {
            "data": str(self.data),
            "tag_rules": str(self.tag_rules) if self.tag_rules else None,
            "route": (
                {"file": str(self.route_file)}
                if self.route_file
                else {"from": list(self.route_from), "to": list(self.route_to)}
            ),
            "origin": list(self.origin) if self.origin else None,
            "weights": {
                "category": w.category,
                "relation": w.relation,
                "uniqueness": w.uniqueness,
                "distance": w.distance,
                "direction": w.direction,
                "connection": w.connection,
                "coverage": w.coverage,
            },
            "extended_metrics": {"connection": w.connection > 0, "coverage": w.coverage > 0},
            "scales": [
                {
                    "name": s.name,
                    "max_distance": s.max_distance,
                    "category_weights": dict(s.category_weights),
                    "depth": s.depth,
                    "weighted_depth": s.weighted_depth,
                    "skeleton": s.skeleton,
                    "map_extent": list(s.extent_size),
                    "ref_len_m": s.ref_len_m,
                }
                for s in self.scales.values()
            ],
            "contexts": [{"name": c.name, "fraction": c.fraction, "scale": c.scale} for c in self.contexts],
            "premerge": self.premerge,
            "turn_threshold_deg": self.turn_threshold_deg,
            "ref_len_m": self.ref_len_m,
            "weighted_depth_endpoint_only": self.weighted_depth_endpoint_only,
            "route_snap_tolerance_m": self.route_snap_tolerance_m,
            "top_k": self.top_k,
            "output_dir": str(self.output_dir),
        }


def _pair(value, what: str) -> tuple[float, float]:
    try:
        lon, lat = (float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be [lon, lat], got {value!r}") from None
    return lon, lat


def _opt_int(v, what):
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ConfigError(f"{what} must be a non-negative integer or null")
    return v


def config_from_dict(doc: Mapping[str, Any], base_dir: Path | str = ".") -> PipelineConfig:
    """Validate a config document; relative paths are resolved against ``base_dir``."""
    if "manifest_version" in doc:
        doc = doc["config"]
    base = Path(base_dir)

    def path(p):
        return None if p is None else (base / p).resolve()

    try:
        if "data" not in doc:
            raise ConfigError("config needs 'data'")
        raw_scales = doc.get("scales") or []
        if not raw_scales:
            raise ConfigError("config needs at least one scale")
        scales: dict[str, FunctionalScale] = {}
        for s in raw_scales:
            name = s["name"]
            if name in scales:
                raise ConfigError(f"duplicate scale {name}")
            extent = s.get("map_extent")
            scales[name] = FunctionalScale(
                name=name,
                max_distance=float(s["max_distance"]),
                category_weights={k: float(v) for k, v in (s.get("category_weights") or {}).items()},
                depth=_opt_int(s.get("depth"), f"scale {name} depth"),
                weighted_depth=_opt_int(s.get("weighted_depth"), f"scale {name} weighted_depth"),
                skeleton=None if s.get("skeleton") is None else float(s["skeleton"]),
                map_extent=None if extent is None else (float(extent[0]), float(extent[1])),
                ref_len_m=None if s.get("ref_len_m") is None else float(s["ref_len_m"]),
            )
        contexts = []
        for c in doc.get("contexts") or []:
            spec = ContextSpec(str(c["name"]), float(c["fraction"]), str(c["scale"]))
            if not _NAME_RE.match(spec.name):
                raise ConfigError(f"context name {spec.name!r} must match {_NAME_RE.pattern}")
            if spec.scale not in scales:
                raise ConfigError(f"context {spec.name} references undefined scale {spec.scale}")
            if not 0.0 <= spec.fraction <= 1.0:
                raise ConfigError(f"context {spec.name}: fraction must lie in [0, 1]")
            contexts.append(spec)
        if len({c.name for c in contexts}) != len(contexts):
            raise ConfigError("context names must be unique")
        if not contexts:
            raise ConfigError("config needs at least one context")

        route = doc.get("route") or {}
        route_file = path(route.get("file"))
        route_from = route_to = None
        if route_file is None:
            if "from" not in route or "to" not in route:
                raise ConfigError("route needs 'from' and 'to' coordinates, or 'file'")
            route_from, route_to = _pair(route["from"], "route.from"), _pair(route["to"], "route.to")

        wdoc = dict(doc.get("weights") or {})
        ext = doc.get("extended_metrics") or {}
        core = [float(wdoc.get(k, 0.2)) for k in ("category", "relation", "uniqueness", "distance", "direction")]
        extra = []
        for k in ("connection", "coverage"):
            # a metric is on when toggled, or when only a positive weight is given
            enabled = ext.get(k, float(wdoc.get(k, 0.0)) > 0)
            extra.append(float(wdoc.get(k, 0.2)) if enabled else 0.0)
        weights = MetricWeights(*core, *extra)

        top_k = doc.get("top_k")
        if top_k is not None and (not isinstance(top_k, int) or top_k < 1):
            raise ConfigError("top_k must be a positive integer or null")
        threshold = float(doc.get("turn_threshold_deg", DEFAULT_TURN_THRESHOLD_DEG))
        ref_len = float(doc.get("ref_len_m", DEFAULT_REF_LEN_M))
        if threshold <= 0 or ref_len <= 0:
            raise ConfigError("turn_threshold_deg and ref_len_m must be positive")

        return PipelineConfig(
            data=path(doc["data"]),
            tag_rules=path(doc.get("tag_rules")),
            scales=scales,
            contexts=contexts,
            route_from=route_from,
            route_to=route_to,
            route_file=route_file,
            weights=weights,
            premerge=bool(doc.get("premerge", False)),
            turn_threshold_deg=threshold,
            ref_len_m=ref_len,
            weighted_depth_endpoint_only=bool(doc.get("weighted_depth_endpoint_only", False)),
            route_snap_tolerance_m=float(doc.get("route_snap_tolerance_m", 10.0)),
            top_k=top_k,
            origin=_pair(doc["origin"], "origin") if doc.get("origin") else None,
            output_dir=path(doc.get("output_dir", "out")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc!r}") from None


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: malformed JSON at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(doc, path.parent)


# ------------------------------------------------------------------------ stages


@dataclass
class Prepared:
    """Everything shared by the contexts of one run."""

    config: PipelineConfig
    mapdata: MapData
    graph: StreetGraph
    route: Route
    decision_points: dict[float, list[DecisionPoint]]  # by reference length
    candidates: list[FeatureCandidate]
    depths: dict[str, int]
    weighted_depths: dict[str, int]

    @property
    def projection(self) -> LocalProjection:
        return self.graph.projection

    def dps_for(self, ref_len: float) -> list[DecisionPoint]:
        if ref_len not in self.decision_points:
            self.decision_points[ref_len] = classify_decision_points(
                self.route, self.graph, self.config.turn_threshold_deg, ref_len
            )
        return self.decision_points[ref_len]


@dataclass
class ContextResult:
    spec: ContextSpec
    context: Context
    selection: NetworkSelection
    ranked: list[tuple[FeatureCandidate, SalienceBreakdown]]


class _Stage:
    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        log.debug("stage %s", self.name)
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def _route_endpoints_file(path: Path) -> list[tuple[float, float]]:
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read route file {path}: {exc}") from None
    geom = doc
    if doc.get("type") == "FeatureCollection":
        geom = doc["features"][0]["geometry"]
    elif doc.get("type") == "Feature":
        geom = doc["geometry"]
    if geom.get("type") != "LineString":
        raise DataError("route file must hold a GeoJSON LineString")
    return [tuple(map(float, p[:2])) for p in geom["coordinates"]]


def prepare(config: PipelineConfig) -> Prepared:
    with _Stage("parse"):
        mapdata = load_map(config.data)
    with _Stage("tag_rules"):
        rules = load_tag_rules(config.tag_rules)
        candidates = apply_tag_rules(mapdata.features, rules, mapdata.warnings)
        if config.premerge:
            candidates = merge_fragments(candidates)
    route_coords = None
    if config.route_file is not None:
        with _Stage("route"):
            route_coords = _route_endpoints_file(config.route_file)
    with _Stage("build_graph"):
        if config.origin:
            origin = config.origin
        elif route_coords:
            origin = ((route_coords[0][0] + route_coords[-1][0]) / 2, (route_coords[0][1] + route_coords[-1][1]) / 2)
        else:
            origin = ((config.route_from[0] + config.route_to[0]) / 2, (config.route_from[1] + config.route_to[1]) / 2)
        projection = LocalProjection(*origin)
        graph = build_graph(mapdata.ways, projection)
    with _Stage("route"):
        if route_coords is not None:
            route = snap_route(graph, route_coords, config.route_snap_tolerance_m)
        else:
            route = route_between(graph, config.route_from, config.route_to)
    with _Stage("analyze_route"):
        candidates = [c.projected(projection) for c in candidates]
        dps = {config.ref_len_m: classify_decision_points(route, graph, config.turn_threshold_deg, config.ref_len_m)}
        dmap = depths(graph, route)
        wmap = weighted_depths(graph, route, endpoint_only=config.weighted_depth_endpoint_only)
    return Prepared(config, mapdata, graph, route, dps, candidates, dmap, wmap)


def evaluate_context(prep: Prepared, spec: ContextSpec) -> ContextResult:
    config = prep.config
    scale = config.scales[spec.scale]
    ref_len = scale.ref_len_m or config.ref_len_m
    ctx = Context.at_fraction(prep.route, spec.fraction, scale, prep.dps_for(ref_len))
    with _Stage(f"select_network[{spec.name}]"):
        selection = select_network(
            prep.graph,
            prep.route,
            ctx.location,
            scale.max_distance,
            depth_n=scale.depth,
            weighted_depth_n=scale.weighted_depth,
            skeleton_w=scale.skeleton,
            weighted_depth_endpoint_only=config.weighted_depth_endpoint_only,
            _depths=prep.depths,
            _wdepths=prep.weighted_depths,
        )
    with _Stage(f"score[{spec.name}]"):
        ranked = rank_candidates(
            prep.candidates,
            ctx,
            config.weights,
            config.top_k,
            graph=prep.graph,
            reachable=set(prep.depths),
        )
    return ContextResult(spec, ctx, selection, ranked)


# ----------------------------------------------------------------------- GeoJSON


def _round_coords(obj):
    if isinstance(obj, (list, tuple)):
        if obj and isinstance(obj[0], (int, float)):
            return [round(float(v), COORD_DECIMALS) for v in obj]
        return [_round_coords(v) for v in obj]
    return obj


def _geojson_geometry(geom) -> dict[str, Any]:
    if geom.geom_type == "Polygon":
        geom = orient(geom, 1.0)
    elif geom.geom_type == "MultiPolygon":
        geom = type(geom)([orient(p, 1.0) for p in geom.geoms])
    m = mapping(geom)
    return {"type": m["type"], "coordinates": _round_coords(m["coordinates"])}


def _num(v):
    if v is None:
        return None
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            return None
        return round(v, VALUE_DECIMALS)
    return v


def _fc(features: list[dict]) -> dict[str, Any]:
    return {"type": "FeatureCollection", "features": features}


def _feature(geometry: dict, properties: dict) -> dict[str, Any]:
    return {"type": "Feature", "geometry": geometry, "properties": {k: _num(v) for k, v in properties.items()}}


def _route_lonlat(route: Route, graph: StreetGraph) -> list[tuple[float, float]]:
    if not route.edges:
        p = graph.vertex_lonlat[route.s]
        return [p, p]
    out = [graph.vertex_lonlat[route.s]]
    for a, e in zip(route.vertices[:-1], route.edges):
        ll = e.lonlat if a == e.u else e.lonlat[::-1]
        out.extend(ll[1:])
    return out


def route_geojson(prep: Prepared, result: ContextResult | None = None) -> dict[str, Any]:
    route, graph = prep.route, prep.graph
    feats = [
        _feature(
            {"type": "LineString", "coordinates": _round_coords(_route_lonlat(route, graph))},
            {
                "kind": "route",
                "start": route.s,
                "destination": route.t,
                "length_m": route.length,
                "edge_count": len(route.edges),
                "hierarchy_profile": [p.street_type for p in hierarchy_profile(route)],
            },
        )
    ]
    if result is not None:
        ctx = result.context
        lon, lat = prep.projection.unproject_point(ctx.location.x, ctx.location.y)
        feats.append(
            _feature(
                {"type": "Point", "coordinates": _round_coords([lon, lat])},
                {
                    "kind": "location",
                    "context": result.spec.name,
                    "scale": result.spec.scale,
                    "fraction": result.spec.fraction,
                    "position_m": ctx.position,
                    "travel_bearing": ctx.travel_bearing,
                    "max_distance": ctx.scale.max_distance,
                },
            )
        )
    return _fc(feats)


def decision_points_geojson(prep: Prepared, dps: Sequence[DecisionPoint]) -> dict[str, Any]:
    return _fc(
        [
            _feature(
                {"type": "Point", "coordinates": _round_coords(list(prep.graph.vertex_lonlat[dp.vertex]))},
                {
                    "vertex": dp.vertex,
                    "dp_class": dp.dp_class,
                    "dp_class_name": DP_CLASS_NAMES[dp.dp_class],
                    "deflection_deg": dp.deflection_deg,
                    "distance_m": dp.distance,
                },
            )
            for dp in dps
        ]
    )


def network_geojson(prep: Prepared, selection: NetworkSelection) -> dict[str, Any]:
    feats = []
    for eid, ann in selection.edges.items():
        e = prep.graph.edges[eid]
        feats.append(
            _feature(
                {"type": "LineString", "coordinates": _round_coords(list(e.lonlat))},
                {
                    "id": eid,
                    "street_type": e.street_type,
                    "depth": ann.depth,
                    "weighted_depth": ann.weighted_depth,
                    "in_skeleton": ann.in_skeleton,
                    "in_buffer": ann.in_buffer,
                    "on_route": ann.on_route,
                },
            )
        )
    return _fc(feats)


def ranked_geojson(ranked: Sequence[tuple[FeatureCandidate, SalienceBreakdown]]) -> dict[str, Any]:
    feats = []
    for rank, (c, br) in enumerate(ranked, start=1):
        props = {
            "rank": rank,
            "id": c.id,
            "name": c.name,
            "category": c.category,
            "feature_type": c.feature_type,
            "category_weight": c.category_weight,
            "S_f": br.total,
            "B_f": br.buffer,
            "S_c": br.category,
            "R": br.relation,
            "U_c": br.uniqueness,
            "D_f": br.distance,
            "O": br.direction,
        }
        if br.connection is not None:
            props["connection"] = br.connection
        if br.coverage is not None:
            props["coverage"] = br.coverage
        props["dist_to_route_m"] = br.dist_to_route
        feats.append(_feature(_geojson_geometry(c.geometry), props))
    return _fc(feats)


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def write_context(prep: Prepared, result: ContextResult, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    docs = {
        "network.geojson": network_geojson(prep, result.selection),
        "candidates_ranked.geojson": ranked_geojson(result.ranked),
        "decision_points.geojson": decision_points_geojson(prep, result.context.decision_points),
        "route.geojson": route_geojson(prep, result),
    }
    paths = []
    for name in OUTPUT_FILES:
        p = out_dir / name
        p.write_text(dump_json(docs[name]))
        paths.append(p)
    return paths


def _sha256(path: Path | None) -> str | None:
    if path is None:
        return None
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunResult:
    prepared: Prepared
    contexts: dict[str, ContextResult]
    manifest: dict[str, Any] | None = None


def run_pipeline(
    config: PipelineConfig,
    output_dir: Path | str | None = None,
    only: Sequence[str] | None = None,
    write: bool = True,
) -> RunResult:
    """Run the whole workflow.

    Contexts run in config order; each finished context is written before the
    next starts, so a failure leaves the outputs of earlier contexts in place.
    """
    out = Path(output_dir) if output_dir is not None else config.output_dir
    specs = [c for c in config.contexts if only is None or c.name in only]
    if only is not None and not specs:
        raise ConfigError(f"no context named {', '.join(only)}")
    prep = prepare(config)
    results: dict[str, ContextResult] = {}
    outputs: dict[str, list[str]] = {}
    for spec in specs:
        res = evaluate_context(prep, spec)
        results[spec.name] = res
        if write:
            with _Stage(f"write[{spec.name}]"):
                outputs[spec.name] = [p.name for p in write_context(prep, res, out / spec.name)]
    manifest = None
    if write:
        effective = config.to_dict()
        effective["output_dir"] = str(out.resolve())
        manifest = {
            "manifest_version": MANIFEST_VERSION,
            "config": effective,
            "inputs": {
                "data_sha256": _sha256(config.data),
                "tag_rules_sha256": _sha256(config.tag_rules),
                "route_file_sha256": _sha256(config.route_file),
            },
            "route": {
                "start": prep.route.s,
                "destination": prep.route.t,
                "length_m": round(prep.route.length, VALUE_DECIMALS),
                "edges": [e.id for e in prep.route.edges],
            },
            "projection_origin": [prep.projection.lon0, prep.projection.lat0],
            "warnings": list(prep.mapdata.warnings),
            "outputs": outputs,
        }
        (out / "manifest.json").write_text(dump_json(manifest))
    return RunResult(prep, results, manifest)


__all__ = [
    "ContextSpec",
    "PipelineConfig",
    "config_from_dict",
    "load_config",
    "prepare",
    "evaluate_context",
    "run_pipeline",
    "OrientSelectError",
]

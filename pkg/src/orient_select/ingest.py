"""Reading map data and turning tagged features into orientation candidates.

Two input formats are understood: OSM XML extracts and a small JSON format for
synthetic street networks.  Both produce the same things: a list of tagged
``RawFeature`` objects and a list of highway ``Way`` objects for graph building.
Candidates are then selected by declarative tag rules.
"""

from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import shapely
from shapely.geometry import LineString, MultiPolygon, Point, Polygon, mapping, shape
from shapely.geometry.base import BaseGeometry
from shapely.ops import linemerge, polygonize, unary_union

from .errors import ConfigError, DataError, ParseError
from .geo import LocalProjection, geometry_kind

log = logging.getLogger(__name__)

FEATURE_TYPES = ("PL", "LL", "AL", "AR", "ER")
REGION_TYPES = ("AR", "ER")

# street type value -> highway tag written for synthetic networks
TYPE_LABELS = {10: "motorway", 20: "primary", 30: "secondary", 40: "tertiary", 50: "residential"}


@dataclass(frozen=True)
class RawFeature:
    id: str
    geometry: BaseGeometry
    tags: Mapping[str, str]


@dataclass(frozen=True)
class Way:
    """A highway way: ordered ``(node_ref, lon, lat)`` triples plus its tags."""

    id: str
    nodes: tuple[tuple[str, float, float], ...]
    tags: Mapping[str, str]

    @property
    def refs(self) -> tuple[str, ...]:
        return tuple(n[0] for n in self.nodes)


@dataclass
class MapData:
    features: list[RawFeature]
    ways: list[Way]
    warnings: list[str] = field(default_factory=list)


def _warn(warnings: list[str], msg: str) -> None:
    warnings.append(msg)
    log.warning(msg)


# --------------------------------------------------------------------------- OSM


def parse_osm(document: str | bytes) -> MapData:
    """Parse an OSM XML document.

    Tagged nodes become points, tagged ways become linestrings or (when closed)
    polygons, and boundary/multipolygon relations become polygons built from
    their outer members.  Ways carrying a ``highway`` tag are returned in
    ``ways``; they are features too only when they carry other tags as well.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise ParseError(f"malformed OSM XML: {exc}", line=exc.position[0]) from None
    warnings: list[str] = []
    coords: dict[str, tuple[float, float]] = {}
    features: list[RawFeature] = []
    ways: list[Way] = []
    way_lines: dict[str, list[str]] = {}

    for el in root.iter("node"):
        nid = el.get("id")
        try:
            lon, lat = float(el.get("lon")), float(el.get("lat"))
        except (TypeError, ValueError):
            _warn(warnings, f"node {nid} has no valid coordinates; skipped")
            continue
        coords[nid] = (lon, lat)
        tags = _tags(el)
        if tags:
            features.append(RawFeature(f"n{nid}", Point(lon, lat), tags))

    for el in root.iter("way"):
        wid = el.get("id")
        refs = [nd.get("ref") for nd in el.iter("nd")]
        way_lines[wid] = refs
        tags = _tags(el)
        if not tags:
            continue
        missing = [r for r in refs if r not in coords]
        if missing:
            _warn(warnings, f"way {wid} references missing node(s) {', '.join(missing[:3])}; skipped")
            continue
        if len(refs) < 2:
            _warn(warnings, f"way {wid} has fewer than two nodes; skipped")
            continue
        pts = [coords[r] for r in refs]
        if "highway" in tags:
            ways.append(Way(f"w{wid}", tuple((r, *coords[r]) for r in refs), tags))
            if set(tags) == {"highway"}:
                continue
        if refs[0] == refs[-1] and len(refs) >= 4:
            geom = Polygon(pts)
        else:
            geom = LineString(pts)
        features.append(RawFeature(f"w{wid}", geom, tags))

    for el in root.iter("relation"):
        rid = el.get("id")
        tags = _tags(el)
        if tags.get("type") not in ("multipolygon", "boundary"):
            continue
        lines = []
        for m in el.iter("member"):
            if m.get("type") != "way" or m.get("role", "") not in ("outer", ""):
                continue
            refs = way_lines.get(m.get("ref"))
            if refs is None or any(r not in coords for r in refs):
                _warn(warnings, f"relation {rid} member way {m.get('ref')} unavailable")
                continue
            if len(refs) >= 2:
                lines.append(LineString([coords[r] for r in refs]))
        polys = list(polygonize(linemerge(lines))) if lines else []
        if not polys:
            _warn(warnings, f"relation {rid} has no closed outer ring; skipped")
            continue
        geom = polys[0] if len(polys) == 1 else MultiPolygon(polys)
        features.append(RawFeature(f"r{rid}", geom, tags))

    return MapData(features, ways, warnings)


def _tags(el: ET.Element) -> dict[str, str]:
    return {t.get("k"): t.get("v") for t in el.iter("tag") if t.get("k") is not None}


# ------------------------------------------------------------ synthetic networks


def parse_network_json(document: str | bytes | Mapping[str, Any]) -> MapData:
    """Read the synthetic-network JSON format.

    ``{"vertices": [{"id", "lon", "lat"}],
       "edges": [{"id", "from", "to", "type", "geometry"?, "tags"?}],
       "features": [{"id", "geometry", "tags"}]}``

    ``type`` is a street type value (10..50); ``geometry`` on an edge is the
    full lon/lat coordinate list from ``from`` to ``to`` (straight if omitted);
    feature geometry is a GeoJSON geometry object.  Each edge becomes a
    single-piece ``Way`` whose id is the edge id.
    """
    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    warnings: list[str] = []
    try:
        vertices = {str(v["id"]): (float(v["lon"]), float(v["lat"])) for v in doc.get("vertices", [])}
        ways = []
        for e in doc.get("edges", []):
            eid, a, b = str(e["id"]), str(e["from"]), str(e["to"])
            if a not in vertices or b not in vertices:
                _warn(warnings, f"edge {eid} references an unknown vertex; skipped")
                continue
            t = int(e["type"])
            if t not in TYPE_LABELS:
                _warn(warnings, f"edge {eid} has unknown street type {t}; skipped")
                continue
            pts = [tuple(map(float, p)) for p in e.get("geometry") or [vertices[a], vertices[b]]]
            nodes = [(a, *vertices[a])]
            nodes += [(f"{eid}#{i}", p[0], p[1]) for i, p in enumerate(pts[1:-1], start=1)]
            nodes.append((b, *vertices[b]))
            tags = {str(k): str(v) for k, v in (e.get("tags") or {}).items()}
            tags["highway"] = TYPE_LABELS[t]
            ways.append(Way(eid, tuple(nodes), tags))
        features = []
        for f in doc.get("features", []):
            geom = shape(f["geometry"])
            if geom.is_empty:
                _warn(warnings, f"feature {f.get('id')} has empty geometry; skipped")
                continue
            features.append(RawFeature(str(f["id"]), geom, {str(k): str(v) for k, v in f.get("tags", {}).items()}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid network JSON: {exc!r}") from None
    return MapData(features, ways, warnings)


def load_map(path: str | Path) -> MapData:
    """Read ``.osm`` XML or synthetic-network ``.json`` depending on the suffix."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if path.suffix.lower() == ".json":
        try:
            return parse_network_json(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno) from None
    return parse_osm(raw)


# --------------------------------------------------------------------- tag rules


@dataclass(frozen=True)
class TagRule:
    key: str
    value_pattern: str
    feature_types: tuple[str, ...]
    category_weight: float
    requirement: tuple[str, ...] = ()
    description: str = ""

    def __post_init__(self):
        if not 0.0 <= self.category_weight <= 1.0:
            raise ConfigError(f"rule {self.key}={self.value_pattern}: weight {self.category_weight} outside [0, 1]")
        bad = [t for t in self.feature_types if t not in FEATURE_TYPES]
        if bad or not self.feature_types:
            raise ConfigError(f"rule {self.key}={self.value_pattern}: invalid feature type(s) {bad or '[]'}")

    def requirement_met(self, tags: Mapping[str, str]) -> bool:
        if not self.requirement:
            return True
        for cond in self.requirement:
            k, sep, v = cond.partition("=")
            k, v = k.strip(), v.strip()
            if k not in tags:
                continue
            if not sep or v == "*" or tags[k] == v:
                return True
        return False

    def matches(self, tags: Mapping[str, str]) -> bool:
        if self.key not in tags:
            return False
        if self.value_pattern != "*" and tags[self.key] != self.value_pattern:
            return False
        return self.requirement_met(tags)

    def to_json(self) -> dict[str, Any]:
        return {
            "key": self.key,
            "value": self.value_pattern,
            "requirement": list(self.requirement) or None,
            "type": list(self.feature_types),
            "description": self.description,
            "weight": self.category_weight,
        }


def rules_from_json(doc: Mapping[str, Any] | Sequence[Mapping[str, Any]]) -> list[TagRule]:
    items = doc["rules"] if isinstance(doc, Mapping) else doc
    rules = []
    for r in items:
        try:
            types = r["type"]
            if isinstance(types, str):
                types = [t.strip() for t in types.split(",")]
            req = r.get("requirement") or ()
            if isinstance(req, str):
                req = [req]
            rules.append(
                TagRule(
                    key=str(r["key"]),
                    value_pattern=str(r.get("value", "*")),
                    feature_types=tuple(types),
                    category_weight=float(r["weight"]),
                    requirement=tuple(req),
                    description=r.get("description", ""),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid tag rule {r!r}: {exc}") from None
    if not rules:
        raise ConfigError("tag rule list is empty")
    return rules


def load_tag_rules(path: str | Path | None = None) -> list[TagRule]:
    """Load rules from a JSON file, or the bundled default table when ``path`` is None."""
    if path is None:
        text = resources.files("orient_select").joinpath("data/tag_rules.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read tag rules {path}: {exc}") from None
    try:
        return rules_from_json(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"tag rules: malformed JSON at line {exc.lineno}") from None


# -------------------------------------------------------------------- candidates


@dataclass(frozen=True)
class FeatureCandidate:
    """A candidate for orientation information.

    ``geometry`` is WGS84; ``xy`` is the same geometry in the local metric frame
    and must be set (see :meth:`projected`) before salience can be computed.
    """

    id: str
    geometry: BaseGeometry
    category: str
    feature_type: str
    category_weight: float
    name: str | None = None
    xy: BaseGeometry | None = field(default=None, compare=False, repr=False)

    @property
    def is_region(self) -> bool:
        return self.feature_type in REGION_TYPES

    def projected(self, projection: LocalProjection) -> "FeatureCandidate":
        return replace(self, xy=projection.project(self.geometry))


def classify_feature_type(geometry: BaseGeometry, rule: TagRule) -> str | None:
    """Pick the feature type allowed by ``rule`` that fits the geometry kind.

    Returns None when no allowed type fits (e.g. a polygon under a linear-only rule).
    """
    kind = geometry_kind(geometry)
    allowed = rule.feature_types
    if kind == "point":
        return "PL" if "PL" in allowed else None
    if kind == "line":
        return "LL" if "LL" in allowed else None
    for t in ("AL", "AR", "ER"):
        if t in allowed:
            return t
    return None


def apply_tag_rules(
    features: Iterable[RawFeature],
    rules: Sequence[TagRule],
    warnings: list[str] | None = None,
) -> list[FeatureCandidate]:
    """First matching rule (in list order) decides category, type and weight."""
    if not rules:
        raise ConfigError("at least one tag rule is required")
    warnings = warnings if warnings is not None else []
    out = []
    for feat in features:
        rule = next((r for r in rules if r.matches(feat.tags)), None)
        if rule is None:
            continue
        ftype = classify_feature_type(feat.geometry, rule)
        if ftype is None:
            _warn(
                warnings,
                f"feature {feat.id}: {geometry_kind(feat.geometry)} geometry incompatible with "
                f"{rule.key}={rule.value_pattern} ({','.join(rule.feature_types)}); dropped",
            )
            continue
        out.append(
            FeatureCandidate(
                id=feat.id,
                geometry=feat.geometry,
                category=f"{rule.key}={feat.tags[rule.key]}",
                feature_type=ftype,
                category_weight=rule.category_weight,
                name=feat.tags.get("name"),
            )
        )
    return out


def merge_fragments(candidates: Sequence[FeatureCandidate]) -> list[FeatureCandidate]:
    """Union touching polygons that share category, name and feature type.

    OSM often stores one region as many small adjacent polygons, which would
    otherwise split its uniqueness across the fragments.  Merged candidates
    keep the smallest member id with a ``+N`` suffix.  Order is preserved by
    first appearance.
    """
    groups: dict[tuple, list[int]] = {}
    for i, c in enumerate(candidates):
        if geometry_kind(c.geometry) == "polygon":
            groups.setdefault((c.category, c.name, c.feature_type), []).append(i)

    replaced: dict[int, FeatureCandidate | None] = {}
    for idxs in groups.values():
        if len(idxs) < 2:
            continue
        geoms = [candidates[i].geometry for i in idxs]
        tree = shapely.STRtree(geoms)
        parent = list(range(len(idxs)))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        left, right = tree.query(geoms, predicate="intersects")
        for a, b in zip(left.tolist(), right.tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        clusters: dict[int, list[int]] = {}
        for k in range(len(idxs)):
            clusters.setdefault(find(k), []).append(k)
        for members in clusters.values():
            if len(members) == 1:
                continue
            pos = [idxs[m] for m in members]
            first = candidates[pos[0]]
            merged = unary_union([candidates[p].geometry for p in pos])
            ids = sorted(candidates[p].id for p in pos)
            replaced[pos[0]] = replace(first, id=f"{ids[0]}+{len(ids) - 1}", geometry=merged, xy=None)
            for p in pos[1:]:
                replaced[p] = None
    out = []
    for i, c in enumerate(candidates):
        if i in replaced:
            if replaced[i] is not None:
                out.append(replaced[i])
        else:
            out.append(c)
    return out


def candidates_to_geojson(candidates: Iterable[FeatureCandidate]) -> dict[str, Any]:
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": c.id,
                "geometry": mapping(c.geometry),
                "properties": {
                    "category": c.category,
                    "feature_type": c.feature_type,
                    "category_weight": c.category_weight,
                    "name": c.name,
                },
            }
            for c in candidates
        ],
    }


def candidates_from_geojson(doc: Mapping[str, Any]) -> list[FeatureCandidate]:
    out = []
    for f in doc["features"]:
        p = f["properties"]
        out.append(
            FeatureCandidate(
                id=str(f["id"]),
                geometry=shape(f["geometry"]),
                category=p["category"],
                feature_type=p["feature_type"],
                category_weight=float(p["category_weight"]),
                name=p.get("name"),
            )
        )
    return out

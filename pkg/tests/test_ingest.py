import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import LineString, Point, Polygon

from orient_select.errors import ConfigError, ParseError
from orient_select.ingest import (
    FeatureCandidate,
    RawFeature,
    TagRule,
    apply_tag_rules,
    candidates_from_geojson,
    candidates_to_geojson,
    classify_feature_type,
    load_tag_rules,
    merge_fragments,
    parse_network_json,
    parse_osm,
)

# five nodes: a bakery node, a closed residential landuse way (1-2-3-4-1) and a bare primary road
OSM_FIXTURE = """<?xml version="1.0" encoding="UTF-8"?>
<osm version="0.6">
  <node id="1" lat="51.000" lon="7.000"/>
  <node id="2" lat="51.000" lon="7.001"/>
  <node id="3" lat="51.001" lon="7.001"/>
  <node id="4" lat="51.001" lon="7.000">
    <tag k="shop" v="bakery"/>
    <tag k="name" v="X"/>
  </node>
  <node id="5" lat="51.002" lon="7.002"/>
  <way id="10">
    <nd ref="1"/><nd ref="2"/><nd ref="3"/><nd ref="4"/><nd ref="1"/>
    <tag k="landuse" v="residential"/>
  </way>
  <way id="11">
    <nd ref="3"/><nd ref="5"/>
    <tag k="highway" v="primary"/>
  </way>
  <way id="12">
    <nd ref="5"/><nd ref="99"/>
    <tag k="waterway" v="stream"/>
  </way>
  <relation id="20">
    <member type="way" ref="10" role="outer"/>
    <tag k="type" v="boundary"/>
    <tag k="boundary" v="administrative"/>
    <tag k="admin_level" v="8"/>
  </relation>
</osm>
"""


@pytest.fixture(scope="module")
def osm():
    return parse_osm(OSM_FIXTURE)


@pytest.fixture(scope="module")
def rules():
    return load_tag_rules()


def test_tagged_node_becomes_point(osm):
    f = next(f for f in osm.features if f.id == "n4")
    assert isinstance(f.geometry, Point)
    assert dict(f.tags) == {"shop": "bakery", "name": "X"}


def test_closed_way_becomes_polygon(osm):
    f = next(f for f in osm.features if f.id == "w10")
    assert isinstance(f.geometry, Polygon)
    assert f.tags["landuse"] == "residential"


def test_bare_highway_way_only_in_way_set(osm):
    assert [w.id for w in osm.ways] == ["w11"]
    assert osm.ways[0].refs == ("3", "5")
    assert all(f.id != "w11" for f in osm.features)


def test_missing_node_skips_way_with_warning(osm):
    assert all(f.id != "w12" for f in osm.features)
    assert osm.warnings == ["way 12 references missing node(s) 99; skipped"]


def test_boundary_relation_becomes_polygon(osm):
    f = next(f for f in osm.features if f.id == "r20")
    assert f.geometry.geom_type == "Polygon"
    assert f.geometry.equals(Polygon([(7.0, 51.0), (7.001, 51.0), (7.001, 51.001), (7.0, 51.001)]))


def test_malformed_xml_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_osm("<osm>\n<node id='1'>\n</osm>")
    assert exc.value.line == 3


def test_osm_fixture_candidates(osm, rules):
    cands = {c.id: c for c in apply_tag_rules(osm.features, rules)}
    assert cands["n4"].feature_type == "PL" and cands["n4"].category == "shop=bakery"
    assert cands["w10"].feature_type == "ER" and cands["w10"].category_weight == 1.0
    assert cands["r20"].feature_type == "AR" and cands["r20"].category_weight == 1.0


# ------------------------------------------------------------------- tag rules


def feat(tags, geom=Point(0, 0), fid="f"):
    return RawFeature(fid, geom, tags)


def test_default_rule_set(rules):
    assert len(rules) == 26
    by = {(r.key, r.value_pattern): r for r in rules}
    assert by[("boundary", "administrative")].requirement == ("admin_level=*",)
    assert by[("boundary", "landuse")].category_weight == 0.3
    assert by[("landuse", "*")].category_weight == 1.0
    assert by[("historic", "*")].category_weight == 0.8
    assert by[("tourism", "*")].category_weight == 0.7
    assert by[("barrier", "*")].requirement == ("height", "fence_type", "description")
    assert by[("natural", "*")].feature_types == ("AL", "LL", "PL")
    assert by[("waterway", "*")].feature_types == ("LL",)


def test_administrative_boundary(rules):
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    [c] = apply_tag_rules([feat({"boundary": "administrative", "admin_level": "8"}, square)], rules)
    assert (c.feature_type, c.category_weight) == ("AR", 1.0)


def test_administrative_boundary_needs_admin_level(rules):
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    assert apply_tag_rules([feat({"boundary": "administrative"}, square)], rules) == []


def test_named_shop(rules):
    [c] = apply_tag_rules([feat({"shop": "bakery", "name": "B"})], rules)
    assert (c.feature_type, c.category_weight, c.name) == ("PL", 0.3, "B")


def test_unnamed_shop_dropped(rules):
    assert apply_tag_rules([feat({"shop": "bakery"})], rules) == []


def test_first_matching_rule_wins(rules):
    # boundary=landuse (0.3) comes before landuse=* (1.0) in list order
    square = Polygon([(0, 0), (1, 0), (1, 1), (0, 1)])
    [c] = apply_tag_rules([feat({"boundary": "landuse", "landuse": "forest"}, square)], rules)
    assert c.category == "boundary=landuse" and c.category_weight == 0.3


def test_requirement_failure_falls_through_to_later_rule(rules):
    [c] = apply_tag_rules([feat({"highway": "bus_stop"})], rules)
    assert c.category_weight == 0.1
    [c] = apply_tag_rules([feat({"highway": "bus_stop", "bridge": "yes"})], rules)
    assert c.category_weight == 0.5


def test_empty_rule_list_rejected():
    with pytest.raises(ConfigError):
        apply_tag_rules([], [])


@pytest.mark.parametrize("weight", [-0.1, 1.5])
def test_rule_weight_range(weight):
    with pytest.raises(ConfigError):
        TagRule("shop", "*", ("PL",), weight)


def test_rule_needs_valid_type():
    with pytest.raises(ConfigError):
        TagRule("shop", "*", ("XX",), 0.5)


# ---------------------------------------------------------------- feature type


AMENITY = TagRule("amenity", "*", ("AL", "PL"), 0.5, ("name",))
WATERWAY = TagRule("waterway", "*", ("LL",), 0.7)


def test_amenity_point_is_point_landmark():
    assert classify_feature_type(Point(0, 0), AMENITY) == "PL"


def test_amenity_polygon_is_areal_landmark():
    assert classify_feature_type(Polygon([(0, 0), (1, 0), (1, 1)]), AMENITY) == "AL"


def test_waterway_polygon_incompatible():
    assert classify_feature_type(Polygon([(0, 0), (1, 0), (1, 1)]), WATERWAY) is None
    warnings = []
    out = apply_tag_rules([feat({"waterway": "river"}, Polygon([(0, 0), (1, 0), (1, 1)]))], [WATERWAY], warnings)
    assert out == [] and warnings


def test_waterway_line():
    assert classify_feature_type(LineString([(0, 0), (1, 0)]), WATERWAY) == "LL"


# --------------------------------------------------------------- properties


tag_values = st.sampled_from(["bakery", "river", "residential", "administrative", "yes", "8"])
tag_keys = st.sampled_from(["shop", "name", "waterway", "landuse", "boundary", "admin_level", "amenity", "bridge"])
features_st = st.lists(
    st.builds(
        lambda i, tags, kind: RawFeature(
            f"f{i}",
            {
                "point": Point(i, 0),
                "line": LineString([(i, 0), (i, 1)]),
                "poly": Polygon([(i, 0), (i + 1, 0), (i + 1, 1)]),
            }[kind],
            tags,
        ),
        st.integers(0, 10_000),
        st.dictionaries(tag_keys, tag_values, max_size=4),
        st.sampled_from(["point", "line", "poly"]),
    ),
    max_size=30,
    unique_by=lambda f: f.id,
)


@settings(max_examples=100, deadline=None)
@given(features_st)
def test_rule_application_properties(features):
    rules = load_tag_rules()
    first = apply_tag_rules(features, rules)
    assert first == apply_tag_rules(features, rules)
    assert len(first) <= len(features)
    by_key = {(r.key, r.value_pattern): r.category_weight for r in rules}
    for c in first:
        assert 0.0 <= c.category_weight <= 1.0
        key, _, value = c.category.partition("=")
        assert c.category_weight in (by_key.get((key, value)), by_key.get((key, "*")))


@settings(max_examples=50, deadline=None)
@given(features_st)
def test_geojson_round_trip(features):
    cands = apply_tag_rules(features, load_tag_rules())
    back = candidates_from_geojson(json.loads(json.dumps(candidates_to_geojson(cands))))
    assert len(back) == len(cands)
    for a, b in zip(cands, back):
        assert a.geometry.equals(b.geometry)
        assert (a.id, a.category, a.feature_type, a.category_weight, a.name) == (
            b.id, b.category, b.feature_type, b.category_weight, b.name
        )


# ------------------------------------------------------------------ pre-merge


def region(fid, x0, name="Town"):
    return FeatureCandidate(fid, Polygon([(x0, 0), (x0 + 1, 0), (x0 + 1, 1), (x0, 1)]), "landuse=residential", "ER", 1.0, name)


def test_merge_touching_fragments():
    merged = merge_fragments([region("a", 0), region("b", 1), region("c", 5)])
    assert [c.id for c in merged] == ["a+1", "c"]
    assert merged[0].geometry.area == pytest.approx(2.0)


def test_merge_respects_name():
    merged = merge_fragments([region("a", 0, "X"), region("b", 1, "Y")])
    assert [c.id for c in merged] == ["a", "b"]


# ------------------------------------------------------------- network JSON


def test_network_json_edges_become_ways():
    doc = {
        "vertices": [{"id": "a", "lon": 7, "lat": 51}, {"id": "b", "lon": 7.001, "lat": 51}],
        "edges": [{"id": "e", "from": "a", "to": "b", "type": 20, "tags": {"junction": "roundabout"}}],
        "features": [{"id": "f", "geometry": {"type": "Point", "coordinates": [7, 51]}, "tags": {"shop": "x"}}],
    }
    data = parse_network_json(doc)
    [w] = data.ways
    assert w.id == "e" and w.refs == ("a", "b") and w.tags["highway"] == "primary"
    assert w.tags["junction"] == "roundabout"
    assert data.features[0].tags == {"shop": "x"}


def test_network_json_invalid():
    with pytest.raises(ParseError):
        parse_network_json({"vertices": [{"id": "a"}]})

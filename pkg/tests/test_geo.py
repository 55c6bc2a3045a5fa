import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import LineString, MultiPolygon, Point, Polygon, box

from orient_select.geo import EARTH_RADIUS_M, LocalProjection, angle_diff, bearing, geometry_kind, outline


def haversine(a, b):
    lon1, lat1, lon2, lat2 = map(math.radians, (*a, *b))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


@settings(max_examples=200, deadline=None)
@given(st.floats(-179, 179), st.floats(-80, 80), st.floats(-0.2, 0.2), st.floats(-0.2, 0.2))
def test_round_trip(lon0, lat0, dlon, dlat):
    proj = LocalProjection(lon0, lat0)
    lon, lat = lon0 + dlon, lat0 + dlat
    back = proj.unproject_point(*proj.project_point(lon, lat))
    assert back == pytest.approx((lon, lat), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(st.floats(-179, 179), st.floats(-80, 80), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_distance_from_centre_is_great_circle(lon0, lat0, dlon, dlat):
    proj = LocalProjection(lon0, lat0)
    x, y = proj.project_point(lon0 + dlon, lat0 + dlat)
    assert math.hypot(x, y) == pytest.approx(haversine((lon0, lat0), (lon0 + dlon, lat0 + dlat)), rel=1e-9, abs=1e-6)


def test_axes():
    proj = LocalProjection(7.0, 51.0)
    assert proj.project_point(7.0, 51.0) == pytest.approx((0.0, 0.0), abs=1e-9)
    x, y = proj.project_point(7.0, 51.001)
    assert abs(x) < 1e-6 and y == pytest.approx(111.195, abs=0.01)
    x, y = proj.project_point(7.001, 51.0)
    assert x == pytest.approx(111.195 * math.cos(math.radians(51)), abs=0.01) and abs(y) < 0.01


def test_geometry_round_trip():
    proj = LocalProjection(7.0, 51.0)
    g = Polygon([(7.0, 51.0), (7.001, 51.0), (7.001, 51.001)])
    assert proj.unproject(proj.project(g)).equals_exact(g, 1e-9)


def test_centered_on():
    proj = LocalProjection.centered_on([(7.0, 51.0), (7.2, 51.4)])
    assert (proj.lon0, proj.lat0) == pytest.approx((7.1, 51.2))


@pytest.mark.parametrize("b,expected", [((0, 1), 0), ((1, 0), 90), ((0, -1), 180), ((-1, 0), 270), ((1, 1), 45)])
def test_bearing(b, expected):
    assert bearing((0, 0), b) == pytest.approx(expected)


@pytest.mark.parametrize("a,b,expected", [(10, 350, 20), (0, 180, 180), (90, 270, 180), (45, 45, 0), (359, 1, 2)])
def test_angle_diff(a, b, expected):
    assert angle_diff(a, b) == pytest.approx(expected)


def test_outline_and_kind():
    sq = box(0, 0, 1, 1)
    assert outline(sq).length == pytest.approx(4)
    assert outline(MultiPolygon([sq, box(2, 0, 3, 1)])).length == pytest.approx(8)
    assert outline(Point(1, 1)).equals(Point(1, 1))
    assert [geometry_kind(g) for g in (Point(0, 0), LineString([(0, 0), (1, 1)]), sq)] == ["point", "line", "polygon"]

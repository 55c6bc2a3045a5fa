"""Local metric frame and small planar helpers.

Inputs are WGS84 lon/lat.  Every distance, bearing and area is computed in a
spherical azimuthal-equidistant projection centred near the route, which keeps
planar error negligible over the tens of kilometres a route covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import shapely
from shapely.geometry import LineString, MultiLineString, MultiPolygon, Point, Polygon
from shapely.geometry.base import BaseGeometry

EARTH_RADIUS_M = 6371008.8


@dataclass(frozen=True)
class LocalProjection:
    """Azimuthal-equidistant projection on a sphere, centred at (lon0, lat0)."""

    lon0: float
    lat0: float

    def forward(self, lon, lat):
        lon = np.radians(np.asarray(lon, dtype=float))
        lat = np.radians(np.asarray(lat, dtype=float))
        lam0, phi0 = math.radians(self.lon0), math.radians(self.lat0)
        dlam = lon - lam0
        # haversine form of the central angle is stable near the centre
        hav = np.sin((lat - phi0) / 2) ** 2 + math.cos(phi0) * np.cos(lat) * np.sin(dlam / 2) ** 2
        c = 2 * np.arcsin(np.sqrt(np.clip(hav, 0.0, 1.0)))
        with np.errstate(invalid="ignore", divide="ignore"):
            k = np.where(c > 1e-12, c / np.sin(c), 1.0)
        x = EARTH_RADIUS_M * k * np.cos(lat) * np.sin(dlam)
        y = EARTH_RADIUS_M * k * (math.cos(phi0) * np.sin(lat) - math.sin(phi0) * np.cos(lat) * np.cos(dlam))
        return x, y

    def inverse(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        lam0, phi0 = math.radians(self.lon0), math.radians(self.lat0)
        rho = np.hypot(x, y)
        c = rho / EARTH_RADIUS_M
        sin_c, cos_c = np.sin(c), np.cos(c)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(rho > 0, y * sin_c * math.cos(phi0) / np.where(rho > 0, rho, 1.0), 0.0)
        phi = np.arcsin(np.clip(cos_c * math.sin(phi0) + ratio, -1.0, 1.0))
        lam = lam0 + np.arctan2(x * sin_c, rho * math.cos(phi0) * cos_c - y * math.sin(phi0) * sin_c)
        return np.degrees(lam), np.degrees(phi)

    def project_point(self, lon: float, lat: float) -> tuple[float, float]:
        x, y = self.forward(lon, lat)
        return float(x), float(y)

    def unproject_point(self, x: float, y: float) -> tuple[float, float]:
        lon, lat = self.inverse(x, y)
        return float(lon), float(lat)

    def project(self, geom: BaseGeometry) -> BaseGeometry:
        return shapely.transform(geom, self._fwd)

    def unproject(self, geom: BaseGeometry) -> BaseGeometry:
        return shapely.transform(geom, self._inv)

    def _fwd(self, coords: np.ndarray) -> np.ndarray:
        x, y = self.forward(coords[:, 0], coords[:, 1])
        return np.column_stack([x, y])

    def _inv(self, coords: np.ndarray) -> np.ndarray:
        lon, lat = self.inverse(coords[:, 0], coords[:, 1])
        return np.column_stack([lon, lat])

    @classmethod
    def centered_on(cls, lonlats: Iterable[Sequence[float]]) -> "LocalProjection":
        """Projection centred on the bounding-box centre of the given points."""
        arr = np.asarray(list(lonlats), dtype=float)
        if arr.size == 0:
            return cls(0.0, 0.0)
        return cls(
            float((arr[:, 0].min() + arr[:, 0].max()) / 2),
            float((arr[:, 1].min() + arr[:, 1].max()) / 2),
        )


def bearing(a: Sequence[float], b: Sequence[float]) -> float:
    """Compass bearing in degrees (0 = north, clockwise) from planar point a to b."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    return math.degrees(math.atan2(dx, dy)) % 360.0


def angle_diff(a: float, b: float) -> float:
    """Absolute angular difference of two bearings, in [0, 180]."""
    d = abs(a - b) % 360.0
    return 360.0 - d if d > 180.0 else d


def outline(geom: BaseGeometry) -> BaseGeometry:
    """Outer perimeter of areal geometry; other geometry is returned unchanged.

    Holes are ignored: distances to regions are measured on the outer boundary.
    """
    if isinstance(geom, Polygon):
        return LineString(geom.exterior.coords)
    if isinstance(geom, MultiPolygon):
        return MultiLineString([list(p.exterior.coords) for p in geom.geoms])
    return geom


def geometry_kind(geom: BaseGeometry) -> str:
    """'point', 'line' or 'polygon'."""
    t = geom.geom_type
    if t in ("Point", "MultiPoint"):
        return "point"
    if t in ("LineString", "MultiLineString", "LinearRing"):
        return "line"
    if t in ("Polygon", "MultiPolygon"):
        return "polygon"
    raise ValueError(f"unsupported geometry type {t}")


def as_point(xy: Sequence[float]) -> Point:
    return Point(float(xy[0]), float(xy[1]))

"""Synthetic grid cities in the network-JSON format, for tests and benchmarks."""

from __future__ import annotations

import random
from typing import Any, Sequence

from .geo import LocalProjection

POINT_TAGS: Sequence[dict[str, str]] = (
    {"shop": "bakery"},
    {"shop": "butcher"},
    {"amenity": "place_of_worship"},
    {"amenity": "pharmacy"},
    {"tourism": "museum"},
    {"historic": "monument"},
    {"leisure": "park"},
    {"highway": "bus_stop"},
    {"railway": "station"},
)


def line_type(index: int, highway_index: int | None = None) -> int:
    """Street type of grid line ``index``: every 8th primary, every 4th secondary, every 2nd tertiary."""
    if highway_index is not None and index == highway_index:
        return 10
    if index % 8 == 0:
        return 20
    if index % 4 == 0:
        return 30
    if index % 2 == 0:
        return 40
    return 50


def grid_city(
    nx: int,
    ny: int,
    spacing: float = 100.0,
    origin: tuple[float, float] = (7.0, 51.0),
    n_features: int = 0,
    seed: int = 0,
    highway_row: int | None = None,
    feature_tags: Sequence[dict[str, str]] = POINT_TAGS,
    polygons: int = 0,
) -> dict[str, Any]:
    """An ``nx`` x ``ny`` vertex grid centred on ``origin``.

    Vertex ``v{i}_{j}`` sits at planar (i*spacing - cx, j*spacing - cy).
    Horizontal edges take the type of their row, vertical ones of their column.
    ``n_features`` named point features and ``polygons`` square landuse areas
    are scattered uniformly over the grid extent.
    """
    proj = LocalProjection(*origin)
    cx, cy = (nx - 1) * spacing / 2, (ny - 1) * spacing / 2

    def ll(x, y):
        lon, lat = proj.unproject_point(x, y)
        return round(lon, 9), round(lat, 9)

    vertices = []
    for j in range(ny):
        for i in range(nx):
            lon, lat = ll(i * spacing - cx, j * spacing - cy)
            vertices.append({"id": f"v{i}_{j}", "lon": lon, "lat": lat})
    edges = []
    for j in range(ny):
        for i in range(nx - 1):
            edges.append({"id": f"h{i}_{j}", "from": f"v{i}_{j}", "to": f"v{i + 1}_{j}", "type": line_type(j, highway_row)})
    for i in range(nx):
        for j in range(ny - 1):
            edges.append({"id": f"c{i}_{j}", "from": f"v{i}_{j}", "to": f"v{i}_{j + 1}", "type": line_type(i)})

    rng = random.Random(seed)
    features = []
    for k in range(n_features):
        x = rng.uniform(-cx, cx)
        y = rng.uniform(-cy, cy)
        tags = dict(feature_tags[rng.randrange(len(feature_tags))])
        tags["name"] = f"feature {k}"
        features.append({"id": f"f{k}", "geometry": {"type": "Point", "coordinates": list(ll(x, y))}, "tags": tags})
    for k in range(polygons):
        x = rng.uniform(-cx, cx)
        y = rng.uniform(-cy, cy)
        half = rng.uniform(0.5, 3.0) * spacing
        ring = [ll(x - half, y - half), ll(x + half, y - half), ll(x + half, y + half), ll(x - half, y + half)]
        ring.append(ring[0])
        features.append(
            {
                "id": f"p{k}",
                "geometry": {"type": "Polygon", "coordinates": [[list(p) for p in ring]]},
                "tags": {"landuse": rng.choice(["residential", "forest", "farmland"])},
            }
        )
    return {"vertices": vertices, "edges": edges, "features": features}

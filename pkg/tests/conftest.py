import math
import sys
from pathlib import Path

import pytest

from orient_select.geo import LocalProjection
from orient_select.ingest import parse_network_json
from orient_select.netgraph import build_graph

sys.path.insert(0, str(Path(__file__).parent))

ORIGIN = (7.0, 51.0)
PROJ = LocalProjection(*ORIGIN)
FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def network_doc(vertices, edges, features=()):
    """Network JSON from planar metre coordinates around ORIGIN.

    vertices: {id: (x, y)}; edges: [(id, u, v, type)] or (id, u, v, type, tags).
    """
    verts = []
    for vid, (x, y) in vertices.items():
        lon, lat = PROJ.unproject_point(x, y)
        verts.append({"id": vid, "lon": lon, "lat": lat})
    es = []
    for e in edges:
        eid, u, v, t = e[:4]
        rec = {"id": eid, "from": u, "to": v, "type": t}
        if len(e) > 4:
            rec["tags"] = e[4]
        es.append(rec)
    return {"vertices": verts, "edges": es, "features": list(features)}


def make_graph(vertices, edges):
    return build_graph(parse_network_json(network_doc(vertices, edges)).ways, PROJ)


@pytest.fixture
def diamond():
    # s-a-t costs 1+1, s-b-t costs 3 (b is off to the side)
    verts = {"s": (0, 0), "a": (1, 0), "t": (2, 0), "b": (1, 1.118033988749895)}
    edges = [("sa", "s", "a", 50), ("at", "a", "t", 50), ("sb", "s", "b", 50), ("bt", "b", "t", 50)]
    return make_graph(verts, edges)


def _step(p, heading, d=100.0):
    h = math.radians(heading)
    return (p[0] + d * math.sin(h), p[1] + d * math.cos(h))


def decision_class_network():
    """Tree-shaped network whose route A..I passes one vertex of every class.

    Returns (vertices, edges, route vertex ids, {vertex: expected class}).
    """
    V = {"A": (0.0, 0.0), "B": (100.0, 0.0), "C": (200.0, 0.0)}
    V["B1"], V["B2"] = (100.0, 100.0), (100.0, -100.0)
    V["D"] = _step(V["C"], 140)  # C: 50 deg bend, no side street
    V["D2"] = _step(V["D"], 140)
    V["E"] = _step(V["D"], 230)  # D: 90 deg turn, one side street
    V["E2"], V["E3"] = _step(V["E"], 230), _step(V["E"], 320)
    V["F"] = _step(V["E"], 140)  # E: 90 deg turn, two side streets
    V["X"] = _step(V["F"], 50)
    V["G"] = _step(V["F"], 140)  # F: straight on past a roundabout arm
    V["H"] = _step(V["G"], 140)  # G: residential joins the motorway
    V["I"] = _step(V["H"], 140)
    edges = [
        ("AB", "A", "B", 50), ("BC", "B", "C", 50), ("BB1", "B", "B1", 20), ("BB2", "B", "B2", 20),
        ("CD", "C", "D", 50), ("DD2", "D", "D2", 50), ("DE", "D", "E", 50),
        ("EE2", "E", "E2", 50), ("EE3", "E", "E3", 50), ("EF", "E", "F", 50),
        ("FX", "F", "X", 50, {"junction": "roundabout"}), ("FG", "F", "G", 50),
        ("GH", "G", "H", 10), ("HI", "H", "I", 10),
    ]
    expected = {"A": 0, "B": 1, "C": 2, "D": 3, "E": 4, "F": 5, "G": 6, "I": 0}
    return V, edges, "ABCDEFGHI", expected


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

"""Regenerate the shipped grid fixture and the golden outputs.

    python3 scripts/make_fixtures.py            # fixture + goldens
    python3 scripts/make_fixtures.py --goldens  # goldens only

The goldens are checked metric by metric against tests/oracles.py in
tests/test_golden.py; rerun that after regenerating.
"""

import argparse
import json
import shutil
import tempfile
from pathlib import Path

from orient_select.pipeline import OUTPUT_FILES, dump_json, load_config, run_pipeline
from orient_select.synth import grid_city

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = ROOT / "tests" / "golden"
ORIGIN = (7.0, 51.0)


def write_fixture():
    net = grid_city(9, 9, spacing=100.0, origin=ORIGIN, n_features=16, seed=7, polygons=3)
    (FIXTURES / "grid_network.json").write_text(dump_json(net))
    v = {x["id"]: (x["lon"], x["lat"]) for x in net["vertices"]}
    config = {
        "data": "grid_network.json",
        "route": {"from": list(v["v0_4"]), "to": list(v["v8_4"])},
        "origin": list(ORIGIN),
        "weights": {"category": 0.2, "relation": 0.2, "uniqueness": 0.2, "distance": 0.2, "direction": 0.2},
        "extended_metrics": {"connection": False, "coverage": False},
        "scales": [
            {"name": "intersection", "max_distance": 250, "depth": 1},
            {"name": "neighborhood", "max_distance": 1000, "depth": 2, "skeleton": 20},
            {"name": "city", "max_distance": 5000, "skeleton": 30},
        ],
        "contexts": [
            {"name": "start", "fraction": 0.2, "scale": "intersection"},
            {"name": "middle", "fraction": 0.5, "scale": "neighborhood"},
            {"name": "end", "fraction": 0.8, "scale": "city"},
        ],
        "turn_threshold_deg": 30,
        "ref_len_m": 50,
        "output_dir": "out",
    }
    (FIXTURES / "config.json").write_text(dump_json(config))


def write_goldens():
    with tempfile.TemporaryDirectory() as tmp:
        res = run_pipeline(load_config(FIXTURES / "config.json"), output_dir=tmp)
        if GOLDEN.exists():
            shutil.rmtree(GOLDEN)
        for ctx in res.contexts:
            (GOLDEN / ctx).mkdir(parents=True)
            for name in OUTPUT_FILES:
                shutil.copy(Path(tmp) / ctx / name, GOLDEN / ctx / name)
        # the manifest carries absolute paths; keep only the portable part
        m = json.loads((Path(tmp) / "manifest.json").read_text())
        keep = {k: m[k] for k in ("route", "projection_origin", "outputs")}
        (GOLDEN / "manifest_excerpt.json").write_text(dump_json(keep))


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--goldens", action="store_true", help="only regenerate the goldens")
    args = ap.parse_args()
    if not args.goldens:
        write_fixture()
    write_goldens()

import json
import subprocess
import sys

import pytest
from conftest import FIXTURES

from orient_select.cli import main

CONFIG = str(FIXTURES / "config.json")


def test_validate_shipped_config(capsys):
    assert main(["validate", "--config", CONFIG]) == 0
    assert "ok" in capsys.readouterr().out


def test_validate_bad_config(tmp_path, capsys):
    p = tmp_path / "c.json"
    doc = json.loads((FIXTURES / "config.json").read_text())
    doc["contexts"][0]["scale"] = "missing"
    doc["data"] = str(FIXTURES / "grid_network.json")
    p.write_text(json.dumps(doc))
    assert main(["validate", "--config", str(p)]) == 1
    assert "undefined scale" in capsys.readouterr().err


def test_validate_missing_data_file(tmp_path):
    p = tmp_path / "c.json"
    doc = json.loads((FIXTURES / "config.json").read_text())
    p.write_text(json.dumps(doc))  # data path now resolves next to the copy, where it does not exist
    assert main(["validate", "--config", str(p)]) == 1


def test_run_writes_outputs(tmp_path, capsys):
    assert main(["run", "--config", CONFIG, "--output", str(tmp_path)]) == 0
    assert len(list(tmp_path.rglob("*.geojson"))) == 12
    assert (tmp_path / "manifest.json").exists()


def test_run_with_unreadable_data_is_a_data_error(tmp_path):
    p = tmp_path / "c.json"
    doc = json.loads((FIXTURES / "config.json").read_text())
    (tmp_path / "grid_network.json").write_text("{ broken")
    p.write_text(json.dumps(doc))
    assert main(["run", "--config", str(p), "--output", str(tmp_path / "out")]) == 2


def test_score_top_five(capsys):
    assert main(["score", "--config", CONFIG, "--context", "middle", "--top", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    header, rows = lines[0].split("\t"), [line.split("\t") for line in lines[1:]]
    assert len(rows) == 5
    s = [float(r[header.index("S_f")]) for r in rows]
    assert s == sorted(s, reverse=True)
    assert [r[0] for r in rows] == ["1", "2", "3", "4", "5"]


def test_score_unknown_context(capsys):
    assert main(["score", "--config", CONFIG, "--context", "nowhere"]) == 1


def test_route_subcommand(capsys):
    net = json.loads((FIXTURES / "grid_network.json").read_text())
    v = {x["id"]: (x["lon"], x["lat"]) for x in net["vertices"]}
    a, b = v["v0_0"], v["v0_3"]
    code = main(["route", "--from", f"{a[0]},{a[1]}", "--to", f"{b[0]},{b[1]}", "--config", CONFIG])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["type"] == "Feature" and doc["geometry"]["type"] == "LineString"
    assert doc["properties"]["edges"] == ["c0_0", "c0_1", "c0_2"]
    assert doc["properties"]["length_m"] == pytest.approx(300, abs=0.01)


def test_route_unreachable_is_a_data_error(tmp_path):
    net = {
        "vertices": [
            {"id": "a", "lon": 7.0, "lat": 51.0}, {"id": "b", "lon": 7.001, "lat": 51.0},
            {"id": "c", "lon": 7.01, "lat": 51.0}, {"id": "d", "lon": 7.011, "lat": 51.0},
        ],
        "edges": [{"id": "ab", "from": "a", "to": "b", "type": 50}, {"id": "cd", "from": "c", "to": "d", "type": 50}],
        "features": [],
    }
    p = tmp_path / "n.json"
    p.write_text(json.dumps(net))
    assert main(["route", "--from", "7.0,51.0", "--to", "7.011,51.0", "--data", str(p)]) == 2


@pytest.mark.parametrize(
    "argv",
    [["run"], ["frobnicate"], ["run", "--config", CONFIG, "--bogus"], ["route", "--from", "x", "--to", "1,2", "--data", "n"]],
)
def test_usage_errors_exit_one(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_module_entry_point_and_log_env(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "orient_select", "run", "--config", CONFIG, "--output", str(tmp_path)],
        capture_output=True, text=True, env={"ORIENT_SELECT_LOG": "debug", "PATH": ""},
    )
    assert proc.returncode == 0, proc.stderr
    assert "DEBUG" in proc.stderr and "stage parse" in proc.stderr

import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from pamarkov import graphs
from pamarkov.cli import main, partition_from_json
from pamarkov.geotype import GeometricType
from pamarkov.partition import validate_markov

MAPS = Path(__file__).resolve().parent.parent / "maps"
CAT = str(MAPS / "cat.json")
SVG = "{http://www.w3.org/2000/svg}"


def run(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_describe(tmp_path):
    code, text = run(tmp_path, "describe", "--map", CAT)
    assert code == 0
    obj = json.loads(text)
    assert obj["schema_version"] == 1 and obj["command"] == "describe"
    assert obj["result"]["genus"] == 1
    assert abs(obj["result"]["lambda_float"] - 2.618033988749895) < 1e-12


def test_inline_map(tmp_path):
    spec = json.dumps({"kind": "torus", "matrix": [[2, 1], [1, 1]], "marked": [["0", "0"]]})
    code, text = run(tmp_path, "order", "--map", spec)
    assert code == 0 and json.loads(text)["result"]["order"] == 1


@pytest.mark.parametrize(
    "argv,code",
    [
        (["partition", "--map", CAT, "--n", "0"], 2),
        (["describe", "--map", '{"kind": "torus", "matrix": [[1, 1], [0, 1]], "marked": [["0", "0"]]}'], 1),
        (["describe", "--map", "/nonexistent/map.json"], 1),
        (["describe", "--map", '{"kind": "torus"}'], 1),
        (["partition", "--map", CAT, "--z", "9"], 1),
        (["partition", "--map", CAT, "--n", "many"], 1),
        (["no-such-command"], 1),
        (["--trace-cap", "0", "coefficient", "--map", CAT], 3),
    ],
    ids=["below-order", "not-hyperbolic", "missing-file", "malformed", "bad-z", "bad-n", "usage", "cap"],
)
def test_exit_codes(tmp_path, argv, code):
    assert main([*argv, "--out", str(tmp_path / "x.json")] if argv[0] != "no-such-command" else argv) == code


def test_caps_restored_after_run(tmp_path):
    main(["--trace-cap", "0", "coefficient", "--map", CAT, "--out", str(tmp_path / "x.json")])
    assert graphs.MAX_DOUBLINGS == 24


def test_partition_round_trip_and_render(tmp_path):
    svg = tmp_path / "p.svg"
    code, text = run(tmp_path, "partition", "--map", CAT, "--svg", str(svg))
    assert code == 0
    obj = json.loads(text)
    res = obj["result"]
    assert all(r["ok"] for r in res["validate_markov"].values())
    assert all(r["ok"] for r in res["validate_adapted"].values())
    p = partition_from_json(obj)
    assert len(p.rectangles) == len(res["partition"]["rectangles"]) == 5
    assert all(r.ok for r in validate_markov(p).values())
    again = tmp_path / "again.svg"
    assert main(["render", "--partition", str(tmp_path / "out.json"), "--out", str(again)]) == 0
    for path in (svg, again):
        root = ET.parse(path).getroot()
        assert root.get("viewBox")
        groups = [g for g in root.iter(SVG + "g") if (g.get("id") or "").startswith("rect-")]
        assert len(groups) == 5
        assert any(e.get("stroke-dasharray") for g in groups for e in g)


def test_graphs_command(tmp_path):
    svg = tmp_path / "g.svg"
    code, text = run(tmp_path, "graphs", "--map", CAT, "--svg", str(svg))
    res = json.loads(text)["result"]
    assert code == 0 and res["compatible"] and res["diagnostics"] == []
    code, text = run(tmp_path, "graphs", "--map", CAT, "--n", "0")
    res = json.loads(text)["result"]
    assert not res["compatible"] and res["diagnostics"]
    assert ET.parse(svg).getroot().get("viewBox")


def test_geotype_round_trip(tmp_path):
    code, text = run(tmp_path, "geotype", "--map", CAT)
    assert code == 0
    res = json.loads(text)["result"]
    t = GeometricType.from_json(res["type"])
    assert t.to_json() == res["type"]
    assert abs(res["perron_root_float"] - res["lambda_float"]) < 1e-9


def test_types_deterministic(tmp_path):
    a = run(tmp_path, "types", "--map", CAT, "--n", "auto", name="a.json")
    b = run(tmp_path, "types", "--map", CAT, "--n", "auto", name="b.json")
    assert a[0] == b[0] == 0
    assert a[1] == b[1]
    res = json.loads(a[1])["result"]
    assert res["n"] == res["order"] == 1 and res["types"]


def test_compare_conjugate(tmp_path):
    code, text = run(tmp_path, "compare", "--map-a", CAT, "--map-b", str(MAPS / "cat_conj.json"))
    assert code == 0
    assert json.loads(text)["result"]["status"] == "equivalent"


def test_first_points_and_coefficient(tmp_path):
    code, text = run(tmp_path, "first-points", "--map", CAT)
    assert code == 0 and json.loads(text)["result"]["count"] == 4
    code, text = run(tmp_path, "coefficient", "--map", CAT, "--z", "2")
    res = json.loads(text)["result"]
    assert code == 0 and res["coefficient"] <= res["bound"]


def test_console_script_help():
    out = subprocess.run([sys.executable, "-m", "pamarkov.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "partition" in out.stdout

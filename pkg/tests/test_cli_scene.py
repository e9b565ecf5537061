import copy
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from lifs.cli import main
from lifs.errors import LipschitzMismatch, OpenDomainRejected, SchemaError
from lifs.render import CORE, ENDPOINT, read_pgm
from lifs.scene import emit, load_ifs, number, parse_scene, scene_from_dict, validate

GALLERY = Path(__file__).resolve().parents[1] / "src" / "lifs" / "gallery"
SCENES = sorted(p.name for p in GALLERY.glob("*.scene"))

BASE = {
    "meta": {"title": "t", "notes": ""},
    "space": {"kind": "grid", "bounds": [[0, 1]], "cell": 0.01},
    "maps": [
        {"name": "a", "kind": "affine", "matrix": [[0.5]], "offset": [0], "lip": 0.5},
        {"name": "b", "kind": "affine", "matrix": [[0.5]], "offset": [0.5], "lip": 0.5},
    ],
    "domains": [{"kind": "all"}, {"kind": "all"}],
}


def scene_with(**changes):
    data = copy.deepcopy(BASE)
    for key, value in changes.items():
        data[key] = value
    return scene_from_dict(data)


@pytest.mark.parametrize("name", SCENES)
def test_round_trip(name):
    scene = parse_scene(GALLERY / name)
    again = scene_from_dict(json.loads(emit(scene)))
    assert again == scene
    assert emit(again) == emit(scene)


def test_basins_scene_shape():
    ifs = load_ifs("cantor_basins.scene")
    assert ifs.n == 4 and ifs.lam == pytest.approx(1 / 3)


def test_symbolic_constant_expanded():
    ifs = load_ifs("maple_sierpinski.scene")
    assert ifs.map(7).b[1] == 1 + (-1 + math.sqrt(3) / 2) / 2
    assert "sqrt(3)/2" in json.dumps(parse_scene("maple_sierpinski.scene").maps[6])


@pytest.mark.parametrize("text, value", [("1/3", 1 / 3), ("sqrt(2)*0.355", 0.355 * math.sqrt(2)), ("-2**-1", -0.5), (3, 3.0)])
def test_numbers(text, value):
    assert number(text, "x") == pytest.approx(value)


@pytest.mark.parametrize("text", ["__import__('os')", "1/0", "x + 1", True])
def test_bad_numbers(text):
    with pytest.raises(SchemaError):
        number(text, "x")


@pytest.mark.parametrize("domain", ["(0, 0.5]", "[0, 0.5)", {"kind": "boxes", "boxes": [["(0, 1)"]]}])
def test_open_domain_rejected(domain):
    with pytest.raises(OpenDomainRejected):
        validate(scene_with(domains=[domain, {"kind": "all"}]))


def test_lipschitz_mismatch():
    data = copy.deepcopy(BASE)
    data["maps"][0].update(matrix=[[1.1]], offset=[0.1])
    data["domains"][0] = "[0, 0.5]"
    with pytest.raises(LipschitzMismatch):
        validate(scene_from_dict(data))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["maps"][0].update(colour="red"),
    lambda d: d["maps"].pop(),
    lambda d: d["space"].update(kind="torus"),
    lambda d: d["maps"][0].update(kind="spiral"),
    lambda d: d["domains"][0].update(kind="ball"),
    lambda d: d["maps"][1].update(name="a"),
])
def test_schema_errors(mutate):
    data = copy.deepcopy(BASE)
    mutate(data)
    with pytest.raises(SchemaError):
        validate(scene_from_dict(data))


def test_schema_error_names_the_field():
    data = copy.deepcopy(BASE)
    data["maps"][1]["matrix"] = [["one"]]
    with pytest.raises(SchemaError, match=r"maps\[1\]\.matrix\[0\]\[0\]"):
        validate(scene_from_dict(data))


def test_overrides():
    ifs = load_ifs("cantor.scene", cell=0.01)
    assert ifs.space.cell == 0.01
    assert load_ifs("symbolic_shift.scene", length=8).space.length == 8


def run(args, capsys):
    code = main([str(a) for a in args])
    return code, capsys.readouterr().out


def test_attractor_outputs(tmp_path, capsys):
    code, out = run(["attractor", "cantor_basins.scene", "--depth", 12, "--out", tmp_path], capsys)
    assert code == 0
    assert json.loads(out)["cells"] == len((tmp_path / "cantor_basins.csv").read_text().splitlines())
    assert json.loads((tmp_path / "cantor_basins.json").read_text()) == json.loads(out)


def test_maple_render(tmp_path, capsys):
    code, _ = run(["attractor", "maple_sierpinski.scene", "--depth", 15, "--render", tmp_path / "out.pgm"], capsys)
    assert code == 0
    raw = (tmp_path / "out.pgm").read_bytes()
    assert raw.startswith(b"P5\n425 400\n255\n")
    img = read_pgm(tmp_path / "out.pgm")
    assert (img[200:400, 25:225] == CORE).any()  # unit square
    assert (img[0:200, 225:425] == CORE).any()  # upper right
    assert (img == ENDPOINT).any()


def test_codespace_counts(capsys):
    code, out = run(["codespace", "edge_cantor3.scene", "--depth", 6], capsys)
    assert code == 0
    assert json.loads(out)["counts"][-1] == 2**6 + 2 * 2**5 + 2**4


def test_verify_convergence(capsys):
    code, out = run(["verify", "cantor.scene", "--suite", "convergence"], capsys)
    assert code == 0 and out.startswith("PASS")


def test_verify_all_scene_checks(capsys):
    code, out = run(["verify", "cantor_basins.scene", "--suite", "all", "--depth", 6], capsys)
    assert code == 0 and out.count("PASS") == 4


def test_basins_command(capsys):
    code, out = run(["basins", "cantor_basins.scene", "--depth", 20, "--set", "3", "--set", "0;2", "--set", "X"], capsys)
    rows = json.loads(out)["reports"]
    assert [(r["inv"], r["out"], r["attracted"]) for r in rows] == [
        (False, False, False), (False, False, True), (True, True, True)]


def test_gd2local_round_trip(tmp_path, capsys):
    code, _ = run(["gd2local", "gd_two_vertex.scene", "--out", tmp_path], capsys)
    assert code == 0
    local = tmp_path / "gd_two_vertex.local.scene"
    ifs = load_ifs(local)
    assert ifs.n == 3
    code, out = run(["gdcheck", "gd_two_vertex.scene", "--depth", 12], capsys)
    assert code == 0 and json.loads(out)["ok"]


def test_orbits_and_essential(tmp_path, capsys):
    code, out = run(["orbits", "edge_cantor3.scene", "--depth", 12], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["endpointCells"] == 2 and rep["endpointGap"]["inf"] > 0.5
    code, out = run(["essential", "cantor_basins.scene", "--depth", 4, "--lookahead", 2, "--out", tmp_path], capsys)
    assert code == 0 and json.loads(out)["ok"]


@pytest.mark.parametrize("args, expected", [
    (["attractor", "open.scene", "--depth", 3], 3),
    (["codespace", "symbolic_shift.scene", "--depth", 30], 4),
    (["attractor", "missing.scene", "--depth", 3], 3),
    (["render", "symbolic_shift.scene", "--depth", 2], 2),
])
def test_exit_codes(tmp_path, monkeypatch, capsys, args, expected):
    data = copy.deepcopy(BASE)
    data["domains"][0] = "(0, 0.5]"
    (tmp_path / "open.scene").write_text(json.dumps(data))
    monkeypatch.chdir(tmp_path)
    assert main([str(a) for a in args]) == expected


def test_usage_error_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["attractor"])
    assert exc.value.code == 2


def test_outputs_are_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        assert main(["orbits", "edge_cantor3.scene", "--depth", "10", "--out", str(tmp_path / d), "--render", "r.pgm"]) == 0
    capsys.readouterr()
    for name in ("edge_cantor3.json", "edge_cantor3.csv", "r.pgm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "lifs.cli", "codespace", "cantor.scene", "--depth", "3"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["counts"] == [2, 4, 8]

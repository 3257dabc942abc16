import json

import pytest

from tempclt.cli import run
from tempclt.qfield import parse_literal

PELL = ["--alpha", "surd:2:-1:1:1", "--beta", "rat:1/2"]


def _run(capsys, argv):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _walk_literals(obj):
    if isinstance(obj, dict):
        if "literal" in obj:
            yield obj["literal"]
        for v in obj.values():
            yield from _walk_literals(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _walk_literals(v)


def test_expand(capsys):
    code, out, _ = _run(capsys, ["expand", *PELL, "--depth", "7"])
    assert code == 0
    rep = json.loads(out)
    assert rep["schema_version"] == 1
    assert rep["result"]["digits"] == [0, 0, 2, 2, 1, 2, 1]
    assert rep["result"]["cycle"] == [3, 2]
    assert rep["result"]["diophantine"]["M"] == 1
    assert rep["inputs"]["alpha"] == "surd:2:-1:1:1"
    for lit in _walk_literals(rep):
        parse_literal(lit)


@pytest.mark.parametrize(
    "argv",
    [
        ["expand", "--alpha", "rat:1/3", "--beta", "rat:1/2"],
        ["expand", "--alpha", "surd:2:-1:1:1", "--beta", "inalpha:1/1:1/1"],
        ["expand", "--alpha", "surd:5:-1:1:2", "--beta", "rat:1/2"],
        ["expand", "--alpha", "surd:2:-1:1:1", "--beta", "garbage"],
        ["tclt", *PELL, "--x", "rat:5/1"],
        ["towers", *PELL, "--depth", "0"],
    ],
)
def test_invalid_parameters(capsys, argv):
    code, out, err = _run(capsys, argv)
    assert code == 2 and out == "" and err


def test_coboundary(capsys):
    code, _, err = _run(capsys, ["towers", "--alpha", "surd:2:-1:1:1", "--beta", "surd:2:-1:1:1"])
    assert code == 3 and "coboundary" in err
    code, out, _ = _run(capsys, ["expand", "--alpha", "surd:2:-1:1:1", "--beta", "surd:2:-1:1:1"])
    assert code == 3 and json.loads(out)["result"]["coboundary_level"] == 1


def test_depth_exhaustion(capsys):
    code, _, err = _run(capsys, ["tclt", *PELL, "--n", "100000", "--depth", "6"])
    assert code == 4
    code, _, _ = _run(capsys, ["markov", *PELL, "--n", "20", "--depth", "10"])
    assert code == 4


def test_towers_and_markov(capsys):
    code, out, _ = _run(capsys, ["towers", *PELL, "--depth", "5"])
    rep = json.loads(out)
    assert code == 0 and rep["result"]["levels"][2]["heights"] == [5, 5, 2]
    code, out, _ = _run(capsys, ["markov", *PELL, "--n", "12", "--samples", "500", "--seed", "3"])
    rep = json.loads(out)
    assert code == 0 and rep["result"]["moments"]["full"]["exact"]
    assert float(rep["result"]["contraction"]["delta"]["decimal"]) < 1


def test_simulate_modes_agree(capsys):
    outs = []
    for mode in ("exact", "fixed_point"):
        code, out, _ = _run(capsys, ["simulate", *PELL, "--n", "5000", "--mode", mode])
        assert code == 0
        outs.append(json.loads(out)["result"]["phi_last"])
    assert outs[0] == outs[1]


def test_tclt_report_and_csv(capsys, tmp_path):
    csv_path = tmp_path / "h.csv"
    argv = ["tclt", *PELL, "--x", "rat:0/1", "--n", "20000", "--bins", "20", "--seed", "7", "--hist-out", str(csv_path)]
    code, out1, _ = _run(capsys, argv)
    assert code == 0
    rep = json.loads(out1)
    hist = rep["result"]["histogram"]
    assert sum(hist["counts"]) + hist["below"] + hist["above"] == 20000
    assert 0 <= float(rep["result"]["D"]["decimal"]) <= 1
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "bin_left,bin_right,count,density" and len(lines) == 23
    # byte-stable for identical inputs
    _, out2, _ = _run(capsys, argv)
    assert out1 == out2


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, out, _ = _run(capsys, ["expand", *PELL, "--depth", "3", "--out", str(path), "--timing"])
    assert code == 0 and out == ""
    assert "seconds" in json.loads(path.read_text())

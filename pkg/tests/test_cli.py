import csv
import io
import json

import pytest

from sepstar.cli import main

FLAT = {"dim": 1, "terms": [{"nu": -1, "zdeg": [1], "zbardeg": [1], "coeff": ["1", "0"]}]}
QUARTIC = {"dim": 1, "base_point": [["0", "0"]], "terms": [
    {"nu": -1, "zdeg": [1], "zbardeg": [1], "coeff": ["1", "0"]},
    {"nu": -1, "zdeg": [2], "zbardeg": [2], "coeff": ["1", "0"]},
    {"nu": 0, "zdeg": [1], "zbardeg": [1], "coeff": ["1", "0"]},
]}
SINGULAR = {"dim": 1, "terms": [{"nu": -1, "zdeg": [2], "zbardeg": [0], "coeff": ["1", "0"]}]}


def fn(zdeg, zbardeg, coeff=("1", "0")):
    return {"dim": 1, "terms": [{"zdeg": [zdeg], "zbardeg": [zbardeg], "coeff": list(coeff)}]}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj, encoding="utf-8")
        return str(p)
    return write


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def star_terms(out):
    """Orders with a zero coefficient are left out of the output."""
    return {int(k): {(tuple(m[0]), tuple(m[1])): (re, im) for m, re, im in v}
            for k, v in json.loads(out).items()}


@pytest.mark.parametrize("w,count", [(0, 1), (1, 2), (2, 7)])
def test_enumerate_counts(capsys, w, count):
    code, res = run(["enumerate", "--max-weight", str(w)], capsys)
    recs = json.loads(res.out)
    assert code == 0 and len(recs) == count
    assert set(recs[0]) == {"type", "W", "W_hat", "N", "aut", "key", "in_U", "graph"}


def test_enumerate_csv_and_operator_weight(capsys, tmp_path):
    out = tmp_path / "cat.csv"
    assert main(["enumerate", "--max-weight", "1", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.reader(io.StringIO(out.read_text(encoding="utf-8"))))
    assert rows[0][:3] == ["type", "W", "W_hat"] and len(rows) == 3
    code, res = run(["enumerate", "--by-operator-weight", "0", "--source-degree", "2"], capsys)
    assert code == 0 and len(json.loads(res.out)) == 2


def test_enumerate_flag_errors(capsys):
    assert run(["enumerate"], capsys)[0] == 2
    assert run(["enumerate", "--by-operator-weight", "1"], capsys)[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["enumerate", "--max-weight", "-1"])
    assert e.value.code == 2


def test_star_flat_examples(files, capsys):
    pot = files("flat.json", FLAT)
    code, res = run(["star", "--potential", pot, "--f", files("f.json", fn(0, 1)),
                     "--g", files("g.json", fn(1, 0)), "--nu-order", "2"], capsys)
    assert code == 0
    assert star_terms(res.out) == {0: {((1,), (1,)): ("1", "0")}, 1: {((0,), (0,)): ("1", "0")}}
    code, res = run(["star", "--potential", pot, "--f", files("f2.json", fn(0, 2)),
                     "--g", files("g2.json", fn(2, 0)), "--nu-order", "2"], capsys)
    assert star_terms(res.out) == {0: {((2,), (2,)): ("1", "0")}, 1: {((1,), (1,)): ("4", "0")},
                                   2: {((0,), (0,)): ("2", "0")}}


def test_star_unit_echoes(files, capsys):
    g = fn(2, 1, ("1/3", "-2"))
    code, res = run(["star", "--potential", files("q.json", QUARTIC), "--f", files("one.json", fn(0, 0)),
                     "--g", files("g.json", g), "--nu-order", "2"], capsys)
    assert code == 0
    assert star_terms(res.out) == {0: {((2,), (1,)): ("1/3", "-2")}}


def test_star_error_codes(files, capsys):
    f, g = files("f.json", fn(0, 1)), files("g.json", fn(1, 0))
    pot = files("flat.json", FLAT)
    assert run(["star", "--potential", files("bad.json", "{"), "--f", f, "--g", g, "--nu-order", "1"], capsys)[0] == 2
    assert run(["star", "--potential", pot, "--f", f, "--g", files("nope.json", {"dim": 1}),
                "--nu-order", "1"], capsys)[0] == 2
    assert run(["star", "--potential", pot, "--f", f, "--g", g, "--nu-order", "2",
                "--jet-degree", "3"], capsys)[0] == 3
    assert run(["star", "--potential", files("s.json", SINGULAR), "--f", f, "--g", g,
                "--nu-order", "1"], capsys)[0] == 4


def test_outputs_are_deterministic(files, tmp_path):
    pot = files("q.json", QUARTIC)
    f, g = files("f.json", fn(1, 2)), files("g.json", fn(2, 1))
    outs = []
    for i in range(2):
        o = tmp_path / f"o{i}.json"
        assert main(["star", "--potential", pot, "--f", f, "--g", g, "--nu-order", "2", "--out", str(o)]) == 0
        p = tmp_path / f"p{i}.json"
        assert main(["operators", "--potential", pot, "--nu-order", "2", "--index-cap", "2", "--out", str(p)]) == 0
        outs.append(o.read_bytes() + p.read_bytes())
    assert outs[0] == outs[1]


def test_operators_flat_is_delta(files, capsys):
    code, res = run(["operators", "--potential", files("flat.json", FLAT), "--nu-order", "2",
                     "--index-cap", "2"], capsys)
    data = json.loads(res.out)
    want = [[0, [0] * n, [0] * n, "1", "0"] for n in range(3)]
    assert code == 0 and data["C"] == want and data["E"] == want
    assert run(["operators", "--potential", files("f2.json", FLAT), "--nu-order", "1",
                "--index-cap", "1", "--emit", "X"], capsys)[0] == 2


@pytest.mark.parametrize("suite", ["axioms", "fundamental"])
def test_verify_flat_suites_pass(files, capsys, suite):
    code, res = run(["verify", "--potential", files("flat.json", FLAT), "--nu-order", "2",
                     "--index-cap", "2", "--suite", suite], capsys)
    rep = json.loads(res.out)
    assert code == 0 and rep["passed"] and rep["reports"][0]["passed"]


@pytest.mark.parametrize("suite", ["axioms", "inversion", "fundamental"])
def test_verify_fault_fails_with_witness(files, capsys, suite):
    code, res = run(["verify", "--potential", files("q.json", QUARTIC), "--nu-order", "2",
                     "--index-cap", "2", "--suite", suite, "--inject-fault"], capsys)
    rep = json.loads(res.out)
    assert code == 1 and not rep["passed"]
    failed = [c for c in rep["reports"][0]["checks"] if not c["passed"]]
    assert failed and all(c.get("witness") is not None for c in failed)

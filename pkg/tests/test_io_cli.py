import json

import numpy as np
import pytest

from conftest import random_spec, scalar_spec
from delay_reach import GridSignal, MatrixMeasure, solve_bezout_commensurate
from delay_reach._validation import GridError
from delay_reach.cli import (EXIT_FAIL, EXIT_GRID, EXIT_IO, EXIT_PASS, EXIT_SCHEMA,
                             EXIT_SHAPE, EXIT_USAGE, run)
from delay_reach.io import (SchemaError, ShapeError, dumps_report, read_bezout, read_signal,
                            spec_from_dict, spec_to_dict, write_bezout, write_signal)

SCALAR = {"schema": "delay-reach/1", "d": 1, "m": 1, "N": 1, "h": "0.25",
          "delays": ["1"], "A": [[[0.5]]], "B": [[1]], "g": []}


def write_spec(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


# -- spec parsing -----------------------------------------------------------

def test_scalar_spec_round_trip():
    s = spec_from_dict(SCALAR)
    ref = scalar_spec()
    assert (s.h, s.delays, s.d, s.m) == (ref.h, ref.delays, 1, 1)
    np.testing.assert_array_equal(s.A, ref.A)
    assert spec_to_dict(s) == SCALAR | {"B": [[1.0]]}


def test_random_spec_round_trip(rng):
    for _ in range(10):
        s = random_spec(rng)
        t = spec_from_dict(json.loads(json.dumps(spec_to_dict(s))))
        assert t.delays == s.delays and t.h == s.h
        np.testing.assert_array_equal(t.A, s.A)
        assert (t.g is None) == (s.g is None)


def test_exact_decimal_divisibility():
    # 0.3 / 0.1 is not an integer in floating point but is exactly 3
    doc = SCALAR | {"h": "0.1", "delays": ["0.3"], "g": []}
    assert spec_from_dict(doc).L == 3
    with pytest.raises(GridError, match="delays\\[0\\]"):
        spec_from_dict(SCALAR | {"delays": ["0.3"]})


@pytest.mark.parametrize("patch, exc, field", [
    ({"schema": "x"}, SchemaError, "schema"),
    ({"d": 0}, SchemaError, "'d'"),
    ({"h": "abc"}, SchemaError, "'h'"),
    ({"delays": ["1", "2"]}, SchemaError, "delays"),
    ({"A": [[[0.5, 1.0]]]}, ShapeError, "'A'"),
    ({"B": [[1, 2]]}, ShapeError, "'B'"),
    ({"g": [[[1.0]]] * 3}, SchemaError, "'g'"),
])
def test_spec_errors_name_the_field(patch, exc, field):
    with pytest.raises(exc, match=field):
        spec_from_dict(SCALAR | patch)


# -- signals and Bezout files -----------------------------------------------------

def test_signal_csv_round_trip(tmp_path, rng):
    sig = GridSignal(0.25, -3, rng.normal(size=(7, 2)))
    write_signal(tmp_path / "s.csv", sig)
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0].startswith("# piecewise constant") and text[1] == "t,v1,v2"
    back = read_signal(tmp_path / "s.csv", 0.25, 2)
    assert back.start == -3 and np.array_equal(back.values, sig.values)


def test_signal_csv_errors(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("t,v1\n0,1\n0.3,2\n")
    with pytest.raises(GridError):
        read_signal(p, 0.25)
    p.write_text("t,v1\n0,1\n0.5,2\n")
    with pytest.raises(SchemaError):
        read_signal(p, 0.25)
    p.write_text("t,v1\n0,1\n")
    with pytest.raises(ShapeError):
        read_signal(p, 0.25, 2)


def test_bezout_file_round_trip(tmp_path):
    s = random_spec(np.random.default_rng(3), d=2, m=1, density=False, commensurate=True)
    pair = solve_bezout_commensurate(s)
    assert pair.success
    write_bezout(tmp_path / "b.json", pair.R, pair.S)
    R, S = read_bezout(tmp_path / "b.json", s)
    assert R.allclose(pair.R, 0) and S.allclose(pair.S, 0)


def test_bezout_file_with_density(tmp_path):
    s = scalar_spec()
    R = MatrixMeasure.zeros(1, 1, s.h)
    S = MatrixMeasure.from_dense(s.h, -3, np.zeros((3, 1, 1)), np.ones((3, 1, 1)))
    write_bezout(tmp_path / "b.json", R, S)
    R2, S2 = read_bezout(tmp_path / "b.json", s)
    assert S2.allclose(S, 0)


# -- report serialization -------------------------------------------------------------

def test_dumps_report_is_canonical():
    a = dumps_report({"b": 0.1, "a": [1, 2.5, float("inf")], "c": 1 + 2j, "d": None})
    b = dumps_report({"d": None, "c": 1 + 2j, "a": [1, 2.5, float("inf")], "b": 0.1})
    assert a == b
    doc = json.loads(a)
    assert list(doc) == ["a", "b", "c", "d"]
    assert doc["b"] == 0.1 and doc["a"][2] == "inf" and doc["c"] == {"im": 2.0, "re": 1.0}
    assert "0.10000000000000001" in a


# -- CLI ----------------------------------------------------------------------------------

def report(out):
    return json.loads((out / "report.json").read_text())


def test_cli_bound(tmp_path):
    out = tmp_path / "o"
    assert run(["bound", "--spec", write_spec(tmp_path, SCALAR), "--out", str(out)]) == EXIT_PASS
    rep = report(out)
    assert rep["minimal_time_bound"] == 1.0
    assert rep["tool_version"] and len(rep["spec_sha256"]) == 64 and "tolerances" in rep


def test_cli_hautus_B_zero_fails_with_witness(tmp_path):
    out = tmp_path / "o"
    spec = write_spec(tmp_path, SCALAR | {"B": [[0]]})
    assert run(["hautus", "--spec", spec, "--out", str(out)]) == EXIT_FAIL
    assert report(out)["witness"]["z"]["re"] == pytest.approx(2.0)
    assert run(["hautus", "--spec", spec, "--strip=-5,5,-4,4", "--out", str(out)]) == EXIT_FAIL
    assert report(out)["method"] == "grid"


def test_cli_verify_scalar(tmp_path):
    out = tmp_path / "o"
    assert run(["verify", "--spec", write_spec(tmp_path, SCALAR), "--out", str(out)]) == EXIT_PASS
    rep = report(out)
    assert rep["error"] <= 1e-9 and rep["verdict"] == "pass"
    assert rep["support"][0] >= -1.25


def test_cli_pipeline_files(tmp_path):
    spec = write_spec(tmp_path, SCALAR)
    s = scalar_spec()
    # bezout -> plan -> compress -> simulate, chained through files
    assert run(["bezout", "--spec", spec, "--out", str(tmp_path / "b")]) == EXIT_PASS
    psi = GridSignal(s.h, 0, np.repeat(0.5 ** np.arange(6), 4))
    write_signal(tmp_path / "psi.csv", psi)
    assert run(["plan", "--spec", spec, "--target", str(tmp_path / "psi.csv"),
                "--bezout", str(tmp_path / "b" / "bezout.json"),
                "--out", str(tmp_path / "p")]) == EXIT_PASS
    omega = read_signal(tmp_path / "p" / "control.csv", s.h, 1)
    wide = GridSignal(s.h, -8, omega.window(-8, 0) + 0.25)
    write_signal(tmp_path / "w.csv", wide)
    assert run(["compress", "--spec", spec, "--input", str(tmp_path / "w.csv"), "--T", "1.25",
                "--out", str(tmp_path / "c")]) == EXIT_PASS
    assert run(["simulate", "--spec", spec, "--input", str(tmp_path / "c" / "control.csv"),
                "--T", "6", "--out", str(tmp_path / "s")]) == EXIT_PASS
    assert (tmp_path / "s" / "output.csv").exists()


def test_cli_bezout_failure_exit(tmp_path):
    spec = write_spec(tmp_path, SCALAR | {"B": [[0]]})
    assert run(["bezout", "--spec", spec, "--out", str(tmp_path / "o")]) == EXIT_FAIL


def test_cli_error_codes(tmp_path):
    out = ["--out", str(tmp_path / "o")]
    good = write_spec(tmp_path, SCALAR)
    assert run(["nope", "--spec", good] + out) == EXIT_USAGE
    assert run(["plan", "--spec", good] + out) == EXIT_USAGE
    assert run(["bound"] + out) == EXIT_USAGE
    assert run(["bound", "--spec", str(tmp_path / "missing.json")] + out) == EXIT_IO
    assert run(["bound", "--spec", write_spec(tmp_path, SCALAR | {"schema": 1}, "a.json")]
               + out) == EXIT_SCHEMA
    assert run(["bound", "--spec", write_spec(tmp_path, SCALAR | {"delays": ["0.3"]}, "b.json")]
               + out) == EXIT_GRID
    assert run(["bound", "--spec", write_spec(tmp_path, SCALAR | {"B": [[1, 1]]}, "c.json")]
               + out) == EXIT_SHAPE
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(["bound", "--spec", str(bad)] + out) == EXIT_SCHEMA


def test_cli_same_seed_same_bytes(tmp_path):
    spec = write_spec(tmp_path, SCALAR)
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        run(["verify", "--spec", spec, "--seed", "11", "--out", str(out)])
        texts.append((out / "report.json").read_bytes())
    assert texts[0] == texts[1]
    run(["verify", "--spec", spec, "--seed", "12", "--out", str(tmp_path / "o2")])
    other = (tmp_path / "o2" / "target.csv").read_bytes()
    assert other != (tmp_path / "o0" / "target.csv").read_bytes()

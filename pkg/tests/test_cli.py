import json

import pytest

from helpers import DATA
from scorealign.cli import execute


def run(*argv):
    return execute([str(a) for a in argv])


def test_score_table_for_path():
    code, out, err = run("score", "-i", DATA / "path.json", "--reach", "E,a,b", "--scores", "ces,resp,shapley")
    assert code == 0 and err == ""
    assert "21/32 (0.656250)" in out
    assert "7/12 (0.583333)" in out


def test_score_json_is_exact():
    code, out, _ = run("score", "-i", DATA / "qrs_dstar.json", "-q", "R(x,y), S(x,z)", "--format", "json")
    doc = json.loads(out)
    assert code == 0
    assert doc["scores"]["t1"]["ces"]["exact"] == "57/256"


def test_score_output_is_deterministic():
    argv = ("score", "-i", DATA / "qrst_dstar.json", "-q", "R(x), S(x,y), T(y)", "--format", "csv")
    assert run(*argv) == run(*argv)


def test_oracle_cross_check():
    code, out, _ = run("score", "-i", DATA / "qrs_dstar.json", "-q", "R(x,y), S(x,z)", "--oracle", "qrs")
    assert code == 0 and "agrees" in out
    code, _, err = run("score", "-i", DATA / "qrs_exogenous.json", "-q", "R(x,y), S(x,z)", "--oracle", "qrs")
    assert code == 1 and "exogenous" in err


def test_align_reports_witness():
    code, out, _ = run("align", "-i", DATA / "qrs_dstar.json", "-q", "R(x,y), S(x,z)", "--pair", "shapley:ces")
    assert code == 0
    assert "not aligned" in out and "witness t4" in out and "witness t6" in out


def test_align_search_records_seed():
    code, out, _ = run("align", "-q", "R(x,y), S(x)", "--search", "--seed", "7", "--trials", "20", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["seed"] == 7 and doc["trials"] == 20


def test_classify():
    code, out, _ = run("classify", "-q", "R1(x), R2(x), R3(x)")
    assert code == 0 and "AlwaysAligned" in out
    code, out, _ = run("classify", "-q", "R(x,y), S(x,z)", "--format", "json")
    doc = json.loads(out)
    assert doc["with_exogenous"]["status"] == "NotAlwaysAligned"
    assert doc["without_exogenous"]["status"] == "AlwaysAligned"


def test_counterexample_round_trip(tmp_path):
    target = tmp_path / "ce.json"
    code, _, _ = run("counterexample", "-q", "R(x), S(y), T(y)", "-o", target)
    assert code == 0
    assert "provenance" in json.loads(target.read_text())
    code, out, _ = run("align", "-i", target, "-q", "R(x), S(y), T(y)", "--pair", "ces:resp")
    assert code == 0 and "not aligned" in out


def test_prob_with_explicit_worlds_and_intervention():
    code, out, _ = run(
        "prob", "-i", DATA / "path.json", "-w", DATA / "path_explicit_pdb.json", "--reach", "E,a,b", "--do", "out:t3"
    )
    assert code == 0
    assert "do(t3 out)" in out and "3/5" not in out


def test_reduce():
    code, out, _ = run("reduce", "-i", DATA / "reduction_example.json", "-q", "R(x,y), S(y,z,x), T(z)")
    assert code == 0 and "R_red(x), S_red(x,z), T(z)" in out


@pytest.mark.parametrize(
    "argv,code",
    [
        (("classify", "-q", "R(x,y"), 2),
        (("bogus",), 2),
        (("align", "-q", "R(x)", "--pair", "ces"), 2),
        (("score", "-i", DATA / "two_component_noexo.json", "-q", "R(x,y), S(x), T(z,w), U(z)", "--max-endo", "5"), 1),
        (("counterexample", "-q", "R(x), S(x)"), 1),
        (("counterexample", "-q", "R(x,y), S(x)"), 1),
        (("score", "-i", DATA / "missing.json", "-q", "R(x)"), 2),
    ],
)
def test_exit_codes(argv, code):
    got, out, err = run(*argv)
    assert got == code
    assert err

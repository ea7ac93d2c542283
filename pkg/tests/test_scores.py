import random
from fractions import Fraction

import pytest

import bruteforce
from helpers import PATH_QUERY, load, q
from scorealign.alignment import random_instance
from scorealign.engine import minimal_witnesses
from scorealign.errors import CapExceededError, DomainError
from scorealign.relational import evaluate
from scorealign.scores import (
    bpi,
    ces,
    delta,
    is_actual_cause,
    is_counterfactual_cause,
    is_dummy,
    mss,
    responsibility,
    responsibility_from_counts,
    score_table,
    shapley,
    swinging_sets,
)

F = Fraction

FIXTURES = [
    ("path", PATH_QUERY),
    ("path_dummy", PATH_QUERY),
    ("qrs_dstar", q("R(x,y), S(x,z)")),
    ("qrs_exogenous", q("R(x,y), S(x,z)")),
    ("qrst_dstar", q("R(x), S(x,y), T(y)")),
    ("theorem_use", q("R1(x,z), R2(x,y,z), R3(x,z)")),
    ("reduction_example", q("R(x,y), S(y,z,x), T(z)")),
]


@pytest.mark.parametrize("name,query", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_scores_match_brute_force(name, query):
    d = load(name)
    expected = bruteforce.all_scores(query, d)
    report = score_table(query, d)
    for t in d.endogenous_ids:
        assert dict(report[t]) == expected[t], t


RANDOM_QUERIES = ["R(x,y), S(y)", "R(x), S(x,y), T(y)", "R(x), S(y)", "R(x,y), S(y,z), T(z,x)"]


@pytest.mark.parametrize("text", RANDOM_QUERIES)
def test_random_instances_match_brute_force(text):
    query = q(text)
    rng = random.Random(text)
    for _ in range(15):
        d = random_instance(query, rng, max_endo=8)
        expected = bruteforce.all_scores(query, d)
        report = score_table(query, d)
        for t in d.endogenous_ids:
            assert dict(report[t]) == expected[t]


@pytest.mark.parametrize("name,query", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_responsibility_routes_agree(name, query):
    d = load(name)
    for t in d.endogenous_ids:
        searched, witness = responsibility(query, d, t)
        assert searched == responsibility_from_counts(query, d, t)
        if searched:
            assert F(1, 1 + witness.size) == searched
            gone = d.world(witness.contingency)
            rest = d.full_world & ~gone
            assert evaluate(query, d, rest)
            assert not evaluate(query, d, rest & ~(1 << d.bit(t)))


@pytest.mark.parametrize("name,query", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_minimal_satisfying_sets_routes_agree(name, query):
    d = load(name)
    from_table = list(mss(query, d))
    assert from_table == sorted(minimal_witnesses(query, d))
    assert from_table == bruteforce.minimal_satisfying(query, d)


def test_path_swinging_sets_and_minimal_sets():
    d = load("path")
    assert {d.world_ids(w) for w in mss(PATH_QUERY, d)} == {
        ("t1",),
        ("t2", "t3"),
        ("t4", "t5", "t6"),
    }
    assert len(swinging_sets(PATH_QUERY, d, "t1")) == 21
    assert len(swinging_sets(PATH_QUERY, d, "t4")) == 3


def test_ces_equals_bpi_and_counts():
    d = load("qrst_dstar")
    query = q("R(x), S(x,y), T(y)")
    for t in d.endogenous_ids:
        value = ces(query, d, t)
        assert value == bpi(query, d, t)
        assert len(swinging_sets(query, d, t)) == value * 2 ** (d.n_endogenous - 1)


def test_shapley_efficiency():
    d = load("qrs_exogenous")
    query = q("R(x,y), S(x,z)")
    total = sum(shapley(query, d, t) for t in d.endogenous_ids)
    assert total == int(evaluate(query, d, d.full_world)) - int(evaluate(query, d, 0))


def test_dummy_tuple_scores_zero():
    d = load("path_dummy")
    assert is_dummy(PATH_QUERY, d, "t7")
    assert not is_dummy(PATH_QUERY, d, "t4")
    report = score_table(PATH_QUERY, d)
    assert all(v == 0 for v in report["t7"].values())


def test_dummy_removal_keeps_other_scores():
    with_dummy = score_table(PATH_QUERY, load("path_dummy"))
    without = score_table(PATH_QUERY, load("path"))
    for t in without.tuple_ids:
        assert with_dummy[t] == without[t]


def test_causes():
    d = load("path")
    assert not is_counterfactual_cause(PATH_QUERY, d, "t1")
    assert is_actual_cause(PATH_QUERY, d, "t1")
    single = d.restrict(["t1"])
    assert is_counterfactual_cause(PATH_QUERY, single, "t1")
    assert responsibility(PATH_QUERY, single, "t1")[0] == 1


def test_delta():
    d = load("path")
    assert delta(PATH_QUERY, d, 0, "t1") == 1
    assert delta(PATH_QUERY, d, d.world(["t2", "t3"]), "t1") == 0
    with pytest.raises(DomainError):
        delta(PATH_QUERY, d, d.world(["t1"]), "t1")


def test_exogenous_tuple_has_no_score():
    d = load("qrs_exogenous")
    with pytest.raises(DomainError):
        ces(q("R(x,y), S(x,z)"), d, "t4")


def test_cap_refuses_large_instances():
    d = load("two_component_noexo")
    with pytest.raises(CapExceededError):
        score_table(q("R(x,y), S(x), T(z,w), U(z)"), d, ("ces",), max_endo=10)


def test_contingency_limit_is_reported():
    d = load("path")
    with pytest.raises(CapExceededError):
        responsibility(PATH_QUERY, d, "t4", max_contingency=1)


def test_unknown_score_rejected():
    with pytest.raises(DomainError):
        score_table(PATH_QUERY, load("path"), ("ces", "gini"))


def test_report_columns():
    d = load("path")
    report = score_table(PATH_QUERY, d, ("ces",))
    assert report.column("ces")["t1"] == F(21, 32)
    assert report.n_endogenous == 6 and report.n_exogenous == 0

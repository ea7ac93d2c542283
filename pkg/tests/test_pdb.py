from fractions import Fraction

import numpy as np
import pytest

from helpers import DATA, PATH_QUERY, load, q
from scorealign.errors import DomainError
from scorealign.pdb import (
    Direction,
    Explicit,
    Tid,
    intervene,
    load_explicit,
    query_probability,
    tid_from_instance,
    tuple_marginal,
    uniform_half_tid,
    weighted_sum,
    world_probability,
)
from scorealign.relational import evaluate, load_instance

F = Fraction


@pytest.fixture
def explicit():
    d = load("path")
    return load_explicit((DATA / "path_explicit_pdb.json").read_text(), d)


def test_explicit_marginals(explicit):
    got = [tuple_marginal(explicit, t) for t in explicit.instance.endogenous_ids]
    assert got == [F(9, 20), F(4, 5), F(3, 5), F(1, 5), F(0), F(3, 4)]


def test_explicit_is_not_tuple_independent(explicit):
    d = explicit.instance
    w1 = d.world(["t1", "t3", "t4", "t6"])
    product = F(1)
    for i, t in enumerate(d.endogenous_ids):
        p = tuple_marginal(explicit, t)
        product *= p if w1 >> i & 1 else 1 - p
    assert world_probability(explicit, w1) == F(1, 5) != product


def test_intervention_pushes_mass(explicit):
    d = explicit.instance
    plus = intervene(explicit, "t3", Direction.IN)
    minus = intervene(explicit, "t3", "out")
    assert world_probability(plus, d.world(["t2", "t3", "t6"])) == F(11, 20)
    assert world_probability(plus, d.world(["t2", "t6"])) == 0
    assert world_probability(minus, d.world(["t2", "t6"])) == F(11, 20)
    assert world_probability(minus, d.world(["t1", "t4", "t6"])) == F(1, 5)
    assert world_probability(minus, d.world(["t1", "t2"])) == F(1, 4)
    assert tuple_marginal(plus, "t3") == 1 and tuple_marginal(minus, "t3") == 0


def test_intervention_leaves_other_marginals_when_independent():
    d = load("path")
    tid = Tid(d, tuple(F(k, 7) for k in range(1, 7)))
    forced = intervene(tid, "t2", Direction.IN)
    for t in d.endogenous_ids:
        expected = 1 if t == "t2" else tid.prob_of(t)
        assert tuple_marginal(forced, t) == expected


def test_intervention_is_idempotent_and_last_wins(explicit):
    once = intervene(explicit, "t3", Direction.IN)
    assert intervene(once, "t3", Direction.IN).as_dict() == once.as_dict()
    flipped = intervene(once, "t3", Direction.OUT)
    assert flipped.as_dict() == intervene(explicit, "t3", Direction.OUT).as_dict()


def test_interventions_on_distinct_tuples_commute(explicit):
    a = intervene(intervene(explicit, "t1", "in"), "t6", "out")
    b = intervene(intervene(explicit, "t6", "out"), "t1", "in")
    assert a.as_dict() == b.as_dict()


def test_query_probability_routes_agree():
    d = load("qrst_dstar")
    query = q("R(x), S(x,y), T(y)")
    tid = Tid(d, tuple(F(1 + i % 5, 7) for i in range(d.n_endogenous)))
    assert query_probability(tid, query) == query_probability(tid.to_explicit(), query)


def test_uniform_probability_counts_worlds():
    d = load("path")
    satisfied = sum(evaluate(PATH_QUERY, d, w) for w in range(64))
    assert query_probability(uniform_half_tid(d), PATH_QUERY) == F(satisfied, 64)


def test_weighted_sum_large_denominators():
    n = 12
    table = np.zeros(1 << n, dtype=np.bool_)
    table[::3] = True
    probs = tuple(F(1, 10**6 + k) for k in range(n))
    expected = F(0)
    for w in range(1 << n):
        if table[w]:
            weight = F(1)
            for i, p in enumerate(probs):
                weight *= p if w >> i & 1 else 1 - p
            expected += weight
    assert weighted_sum(table, probs) == expected


def test_tid_defaults_missing_probabilities_to_half():
    d = load_instance(
        {
            "relations": [
                {
                    "name": "R",
                    "arity": 1,
                    "tuples": [{"id": "t1", "values": ["a"], "p": "0.3"}, {"id": "t2", "values": ["b"]}],
                }
            ]
        }
    )
    assert tid_from_instance(d).probs == (F(3, 10), F(1, 2))


def test_explicit_validation():
    d = load("path")
    with pytest.raises(DomainError):
        Explicit(d, ((0, F(1, 2)),))
    with pytest.raises(DomainError):
        Explicit(d, ((0, F(3, 2)), (1, F(-1, 2))))
    with pytest.raises(DomainError):
        Tid(d, (F(1, 2),))


def test_exogenous_tuples_are_certain():
    d = load("qrs_exogenous")
    assert tuple_marginal(uniform_half_tid(d), "t4") == 1
    with pytest.raises(DomainError):
        intervene(uniform_half_tid(d), "t4", Direction.OUT)

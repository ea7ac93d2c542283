import random

import pytest

import bruteforce
from helpers import load, q
from scorealign.alignment import random_instance
from scorealign.errors import DomainError, UnsupportedQueryError
from scorealign.oracles import analytic_oracle_qr1sm, analytic_oracle_qrs
from scorealign.relational import Fact, Instance
from scorealign.scores import score_table
from scorealign.structure import (
    Reason,
    Status,
    analyze,
    classify,
    coincidences,
    components,
    reduce,
    reduce_query,
    rename_variables,
)


def test_components_follow_shared_variables():
    comps = components(q("R(x,y), S(x), T(z,w), U(z)"))
    assert [c.atom_indices for c in comps] == [(0, 1), (2, 3)]
    assert str(comps[1].subquery) == "T(z,w), U(z)"


def test_coincidences_group_variables_by_atoms():
    assert coincidences(q("R(x,y), T(x,y,z), U(z)")) == [("x", "y"), ("z",)]
    assert coincidences(q("R1(x,z), R2(x,y,z), R3(x,z)")) == [("x", "z"), ("y",)]
    info = analyze(q("R(x), S(y)"))
    assert len(info.components) == 2 and info.self_join_free


def test_reduced_query_shape():
    assert str(reduce_query(q("R(x,y,z), S(x,y,z), T(x,y,z)"))) == "R_red(x), S_red(x), T_red(x)"
    assert str(reduce_query(q("R(x,y,w), S(x,y), T(x,y)"))) == "R_red(x,w), S_red(x), T_red(x)"
    plain = q("R(x,y), S(x)")
    assert reduce_query(plain) == plain


def test_reduction_of_worked_instance():
    query = q("R(x,y), S(y,z,x), T(z)")
    red = reduce(query, load("reduction_example"))
    assert str(red.query) == "R_red(x), S_red(x,z), T(z)"
    rows = {f.id: (f.relation, f.values) for f in red.instance.facts}
    assert rows["t1"] == ("R_red", ("c1",))
    assert rows["t4"] == ("R_red", ("c4",))
    assert rows["t5"] == ("S_red", ("c1", "a"))
    assert rows["t10"] == ("S_red", ("c5", "a"))
    assert rows["t11"] == ("T", ("a",))
    assert red.instance.exogenous_ids == ("t1", "t2")


def _scores_preserved(query, d):
    red = reduce(query, d)
    before = score_table(query, d, ("ces", "resp", "shapley"))
    after = score_table(red.query, red.instance, ("ces", "resp", "shapley"))
    return all(before[t] == after[red.tuple_map[t]] for t in d.endogenous_ids)


@pytest.mark.parametrize("text", ["R(x,y), S(y,z,x), T(z)", "R(x,y,z), S(x,y), T(z)", "R(x,y), S(y,x)"])
def test_reduction_preserves_scores(text):
    query = q(text)
    rng = random.Random(text)
    for _ in range(15):
        assert _scores_preserved(query, random_instance(query, rng, max_endo=9, domain_size=3))


def test_reduction_handles_inconsistent_repeated_values():
    query = q("R(x,y), S(x,y)")
    d = Instance.build(
        [Fact("t1", "R", ("a", "b")), Fact("t2", "S", ("a", "b")), Fact("t3", "S", ("b", "a"))]
    )
    assert _scores_preserved(query, d)


def test_classification_cases():
    cases = {
        "R1(x), R2(x), R3(x)": (Status.ALWAYS_ALIGNED, Reason.SINGLE_COINCIDENCE),
        "R(x,y), S(y,x)": (Status.ALWAYS_ALIGNED, Reason.SINGLE_COINCIDENCE),
        "R(x), S(y,z)": (Status.ALWAYS_ALIGNED, Reason.SINGLE_ATOM_COMPONENTS),
        "R(x,y), S(x)": (Status.NOT_ALWAYS_ALIGNED, Reason.COINCIDENCE_SPLIT),
        "R1(x,z), R2(x,y,z), R3(x,z)": (Status.NOT_ALWAYS_ALIGNED, Reason.COINCIDENCE_SPLIT),
        "R(x), S(y), T(y)": (Status.NOT_ALWAYS_ALIGNED, Reason.MULTI_ATOM_COMPONENT),
    }
    for text, (status, reason) in cases.items():
        verdict = classify(q(text)).with_exogenous
        assert (verdict.status, verdict.reason) == (status, reason), text


def test_classification_without_exogenous():
    assert classify(q("R(x,y), S(x,z)")).without_exogenous.reason is Reason.TWO_ATOMS_FEW_COINCIDENCES
    star = classify(q("R(x,y), S1(x), S2(x), S3(x)")).without_exogenous
    assert star.reason is Reason.BINARY_WITH_UNARY_STAR
    hub_second = classify(q("R(y,x), S1(x), S2(x)")).without_exogenous
    assert hub_second.reason is Reason.BINARY_WITH_UNARY_STAR
    assert classify(q("R(x), S(x,y), T(y)")).without_exogenous.status is Status.UNKNOWN
    assert classify(q("R1(x)")).without_exogenous.status is Status.ALWAYS_ALIGNED


def test_classification_ignores_atom_order_and_names():
    for text in ["R(x,y), S(x), T(z,w), U(z)", "R1(x,z), R2(x,y,z), R3(x,z)", "R(x,y), S(y,x)"]:
        query = q(text)
        base = classify(query)
        shuffled = type(query)(tuple(reversed(query.atoms)))
        renamed = rename_variables(query, {v: v + "9" for v in query.variables()})
        for other in (shuffled, renamed):
            verdict = classify(other)
            assert verdict.with_exogenous == base.with_exogenous
            assert verdict.without_exogenous == base.without_exogenous


def test_multi_component_aligned_implies_components_aligned():
    query = q("R(x,y), S(z), T(w,v,u)")
    assert classify(query).with_exogenous.status is Status.ALWAYS_ALIGNED
    for comp in components(query):
        assert classify(comp.subquery).with_exogenous.status is Status.ALWAYS_ALIGNED


def test_classification_refuses_self_joins_and_constants():
    with pytest.raises(UnsupportedQueryError) as info:
        classify(q("R(x,y), R(y,x)"))
    assert info.value.kind == "self-join"
    with pytest.raises(UnsupportedQueryError):
        classify(q("R(x,'a')"))


# ---------------------------------------------------------------------------
# Closed-form oracles


def _numbered(rows):
    return Instance.build(Fact(f"t{i}", rel, values) for i, (rel, values) in enumerate(rows, 1))


def _qrs_instance(blocks):
    rows = []
    for c, (r, s) in blocks.items():
        rows += [("R", (c, f"r{c}{i}")) for i in range(r)]
        rows += [("S", (c, f"s{c}{i}")) for i in range(s)]
    return _numbered(rows)


@pytest.mark.parametrize("blocks", [{"a": (1, 2)}, {"a": (2, 3), "b": (1, 1)}, {"a": (1, 2), "b": (2, 1), "c": (2, 2)}])
def test_qrs_oracle_matches_brute_force(blocks):
    d = _qrs_instance(blocks)
    query = q("R(x,y), S(x,z)")
    oracle = analytic_oracle_qrs(d)
    for t in d.endogenous_ids:
        assert oracle[t]["ces"] == bruteforce.causal_effect(query, d, t)
        assert oracle[t]["resp"] == bruteforce.responsibility(query, d, t)


def _qr1sm_instance(r_counts, m):
    rows = []
    for c, r in r_counts.items():
        rows += [("R", (c, f"r{c}{i}")) for i in range(r)]
        rows += [(f"S{j}", (c,)) for j in range(1, m + 1)]
    return _numbered(rows)


@pytest.mark.parametrize("r_counts,m", [({"a": 1}, 2), ({"a": 2, "b": 1}, 2), ({"a": 1, "b": 3}, 3), ({"a": 2}, 1)])
def test_qr1sm_oracle_matches_brute_force(r_counts, m):
    d = _qr1sm_instance(r_counts, m)
    query = q(", ".join(["R(x,y)"] + [f"S{j}(x)" for j in range(1, m + 1)]))
    if m == 1:
        oracle = analytic_oracle_qr1sm(d, m, s_names=("S1",))
    else:
        oracle = analytic_oracle_qr1sm(d, m)
    for t in d.endogenous_ids:
        assert oracle[t]["ces"] == bruteforce.causal_effect(query, d, t)
        assert oracle[t]["resp"] == bruteforce.responsibility(query, d, t)


def test_oracles_refuse_exogenous_and_dummies():
    with pytest.raises(DomainError):
        analytic_oracle_qrs(load("qrs_exogenous"))
    with pytest.raises(DomainError):
        analytic_oracle_qrs(Instance.build([Fact("t1", "R", ("a", "b")), Fact("t2", "S", ("b", "c"))]))

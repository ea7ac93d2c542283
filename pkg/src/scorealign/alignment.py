"""Rankings induced by scores, alignment checks, and counterexample instances.

Counterexamples are built by lifting a small seed instance of a seed query
into an instance of the target query.  Selected "carrier" atoms of the
target receive copies of the seed tuples of one seed atom, keeping their
endogenous flags; every other atom receives exogenous "support" tuples,
namely the projections of all seed answers onto its variables.  Variables
outside the chosen roles are filled with the reserved constant ``@c``.
Under this lifting a sub-instance satisfies the target query exactly when
the corresponding seed sub-instance satisfies the seed query, so every
score carries over unchanged.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import HypothesisError, VerificationError
from .relational import BCQ, Atom, Fact, Instance, MonotoneQuery, Schema, homomorphisms
from .scores import score_table
from .structure import Status, _require_plain, classify, coincidences, components

FILLER = "@c"


@dataclass(frozen=True)
class RankingPreorder:
    """Total preorder on tuples: ``a ⪯ b`` iff ``score(a) <= score(b)``."""

    score: str
    values: Mapping[str, Fraction]

    def leq(self, a: str, b: str) -> bool:
        return self.values[a] <= self.values[b]

    def lt(self, a: str, b: str) -> bool:
        return self.values[a] < self.values[b]


@dataclass(frozen=True)
class AlignmentWitness:
    first: str
    second: str
    first_values: tuple[Fraction, Fraction]
    second_values: tuple[Fraction, Fraction]


@dataclass(frozen=True)
class AlignmentVerdict:
    scores: tuple[str, str]
    aligned: bool
    witness: AlignmentWitness | None = None


def compare_rankings(
    ranking1: RankingPreorder, ranking2: RankingPreorder, order: Sequence[str] | None = None
) -> AlignmentVerdict:
    """First pair (in ``order``) ranked in strictly opposite directions.

    The rankings are compatible when no pair has ``a < b`` under one score
    and ``b < a`` under the other.  A tie under one score is compatible with
    any order under the other, so a constant score is aligned with every
    score.
    """
    ids = list(order if order is not None else ranking1.values)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if (ranking1.lt(a, b) and ranking2.lt(b, a)) or (ranking1.lt(b, a) and ranking2.lt(a, b)):
                witness = AlignmentWitness(
                    a,
                    b,
                    (ranking1.values[a], ranking2.values[a]),
                    (ranking1.values[b], ranking2.values[b]),
                )
                return AlignmentVerdict((ranking1.score, ranking2.score), False, witness)
    return AlignmentVerdict((ranking1.score, ranking2.score), True)


def check_alignment(
    q: MonotoneQuery,
    d: Instance,
    sc1: str,
    sc2: str,
    *,
    tuple_ids: Sequence[str] | None = None,
    max_endo: int | None = None,
) -> AlignmentVerdict:
    """Compare the rankings of two scores over the endogenous tuples
    (or over ``tuple_ids`` when given)."""
    report = score_table(q, d, dict.fromkeys((sc1, sc2)), max_endo=max_endo)
    ids = list(tuple_ids) if tuple_ids is not None else list(report.tuple_ids)
    r1 = RankingPreorder(sc1, {t: report[t][sc1] for t in ids})
    r2 = RankingPreorder(sc2, {t: report[t][sc2] for t in ids})
    return compare_rankings(r1, r2, ids)


# ---------------------------------------------------------------------------
# Lifting seeds into target queries


@dataclass(frozen=True)
class _Seed:
    query: BCQ
    instance: Instance


def _seed(text: str, rows: Mapping[str, Sequence[tuple[tuple[str, ...], bool]]]) -> _Seed:
    from .relational import parse_query

    facts = []
    for rel, entries in rows.items():
        for values, endogenous in entries:
            facts.append(Fact(f"s{len(facts) + 1}", rel, values, endogenous))
    return _Seed(parse_query(text), Instance.build(facts))


# Q2 with S(a) exogenous.  Contingency sets never contain exogenous tuples,
# so every responsibility here is 1/3 and the scores stay compatible; the
# lifted instance therefore fails verification.
SINGLE_SEED = _seed(
    "R(x,y), S(x)",
    {
        "R": [(("a", "a"), True), (("a", "b"), True), (("b", "a"), True)],
        "S": [(("a",), False), (("b",), True)],
    },
)

# Two components.  R(a) is ranked above S(c) by responsibility (1/2 vs 1/3)
# and below it by causal effect (23/64 vs 27/64); T(c) is exogenous.
MULTI_SEED = _seed(
    "R(x), S(y), T(y)",
    {
        "R": [(("a",), True), (("b",), True)],
        "S": [(("a",), True), (("b",), True), (("c",), True)],
        "T": [(("a",), True), (("b",), True), (("c",), False)],
    },
)

# Fully endogenous R(x,y), S(x,z) instance where Shapley disagrees with both
# causal effect and responsibility.
SHAPLEY_SEED = _seed(
    "R(x,y), S(x,z)",
    {
        "R": [(("a", "c1"), True), (("b", "c2"), True), (("b", "c3"), True)],
        "S": [(("a", "c4"), True), (("a", "c5"), True)]
        + [(("b", f"c{k}"), True) for k in range(6, 10)],
    },
)


class Mode(enum.Enum):
    SINGLE_COMPONENT = "single"
    MULTI_COMPONENT = "multi"
    SHAPLEY_VS_CES_RESP = "shapley"


@dataclass(frozen=True)
class Lifting:
    """Target variables mapped to seed variables, and carrier atoms mapped
    to seed relations."""

    roles: Mapping[str, str]
    carriers: Mapping[int, str]
    notes: tuple[str, ...] = ()


def lift(q: BCQ, seed: _Seed, lifting: Lifting) -> Instance:
    answers = [b for b, _ in homomorphisms(seed.query.atoms, seed.instance.facts_of)]
    facts: list[Fact] = []
    for index, atom in enumerate(q.atoms):
        rows: list[tuple[tuple[str, ...], bool]] = []
        seed_rel = lifting.carriers.get(index)
        if seed_rel is not None:
            seed_atom = next(a for a in seed.query.atoms if a.relation == seed_rel)
            for f in seed.instance.facts_of(seed_rel):
                binding = {t.name: v for t, v in zip(seed_atom.terms, f.values)}
                rows.append((_project(atom, lifting.roles, binding), f.endogenous))
        else:
            seen: dict[tuple[str, ...], None] = {}
            for binding in answers:
                seen.setdefault(_project(atom, lifting.roles, binding))
            rows = [(values, False) for values in seen]
        for values, endogenous in rows:
            facts.append(Fact(f"t{len(facts) + 1}", atom.relation, values, endogenous))
    return Instance(Schema.of(q.relations()), tuple(facts))


def _project(atom: Atom, roles: Mapping[str, str], binding: Mapping[str, str]) -> tuple[str, ...]:
    return tuple(binding[roles[t.name]] if t.name in roles else FILLER for t in atom.terms)


def _single_component_lifting(q: BCQ) -> Lifting:
    comps = components(q)
    if len(comps) != 1:
        raise HypothesisError("single-component construction needs a connected query")
    cells = coincidences(q)
    if len(cells) < 2:
        raise HypothesisError(
            "single-component construction needs at least two coincidence cells"
        )
    atoms_of = {cell: q.atoms_of(cell[0]) for cell in cells}
    big = small = None
    for cell in cells:
        contained = [c for c in cells if atoms_of[c] < atoms_of[cell]]
        if contained:
            big = cell
            small = max(contained, key=lambda c: len(atoms_of[c]))
            break
    if big is None:
        for cell in cells:
            partners = [c for c in cells if c != cell and atoms_of[c] & atoms_of[cell]]
            if partners:
                big, small = cell, partners[0]
                break
    shared = atoms_of[big] & atoms_of[small]
    only_big = sorted(atoms_of[big] - atoms_of[small])
    pivot = only_big[0]
    pivot_vars = set(q.atoms[pivot].variables())
    carrier_r = max(
        sorted(shared), key=lambda i: (len(pivot_vars & set(q.atoms[i].variables())), -i)
    )
    roles = {v: "x" for v in big} | {v: "y" for v in small}
    notes = (f"x <- {{{','.join(big)}}}", f"y <- {{{','.join(small)}}}")
    return Lifting(roles, {carrier_r: "R", pivot: "S"}, notes)


def _multi_component_lifting(q: BCQ) -> Lifting:
    comps = components(q)
    if len(comps) < 2:
        raise HypothesisError("multi-component construction needs at least two components")
    wide = next((c for c in comps if len(c.atom_indices) >= 2), None)
    if wide is None:
        raise HypothesisError("multi-component construction needs a component with two atoms")
    pair = None
    for i, a in enumerate(wide.atom_indices):
        for b in wide.atom_indices[i + 1 :]:
            common = [v for v in q.atoms[a].variables() if v in q.atoms[b].variables()]
            if common:
                pair = (a, b, common[0])
                break
        if pair:
            break
    a_s, a_t, y = pair
    other = next(c for c in comps if c is not wide)
    a_r = other.atom_indices[0]
    x = q.atoms[a_r].variables()[0]
    notes = (f"A_R = {q.atoms[a_r]}", f"A_S = {q.atoms[a_s]}", f"A_T = {q.atoms[a_t]}")
    return Lifting({x: "x", y: "y"}, {a_r: "R", a_s: "S", a_t: "T"}, notes)


def _shapley_lifting(q: BCQ) -> Lifting:
    for i, a in enumerate(q.atoms):
        va = set(a.variables())
        for j in range(i + 1, len(q.atoms)):
            vb = set(q.atoms[j].variables())
            if va & vb and not va <= vb and not vb <= va:
                shared = [v for v in a.variables() if v in vb]
                y = next(v for v in a.variables() if v not in vb)
                z = next(v for v in q.atoms[j].variables() if v not in va)
                roles = {v: "x" for v in shared} | {y: "y", z: "z"}
                notes = [f"A_R = {a}", f"A_S = {q.atoms[j]}"]
                if len(shared) > 1:
                    notes.append(f"shared variables {{{','.join(shared)}}} collapsed to one")
                return Lifting(roles, {i: "R", j: "S"}, tuple(notes))
    raise HypothesisError(
        "Shapley construction needs two atoms sharing a variable with neither "
        "variable set contained in the other"
    )


@dataclass(frozen=True)
class Counterexample:
    mode: Mode
    instance: Instance
    verdict: AlignmentVerdict
    lifting: Lifting
    extra_verdicts: tuple[AlignmentVerdict, ...] = field(default=())

    def provenance(self) -> dict:
        return {
            "mode": self.mode.value,
            "roles": dict(self.lifting.roles),
            "carriers": {str(k): v for k, v in self.lifting.carriers.items()},
            "notes": list(self.lifting.notes),
            "verdict": _verdict_dict(self.verdict),
        }


def _verdict_dict(v: AlignmentVerdict) -> dict:
    out: dict = {"scores": list(v.scores), "aligned": v.aligned}
    if v.witness:
        w = v.witness
        out["witness"] = {
            w.first: [str(x) for x in w.first_values],
            w.second: [str(x) for x in w.second_values],
        }
    return out


def construct_instance(q: BCQ, mode: Mode | str | None = None) -> tuple[Mode, Instance, Lifting]:
    """Lifted instance for ``q`` without checking the resulting scores.

    Without ``mode``, the construction is chosen from the classification.
    Raises ``HypothesisError`` when the query does not fit the construction.
    """
    _require_plain(q)
    if mode is None:
        verdict = classify(q).with_exogenous
        if verdict.status is Status.ALWAYS_ALIGNED:
            raise HypothesisError("query is aligned on every instance")
        mode = Mode.SINGLE_COMPONENT if len(components(q)) == 1 else Mode.MULTI_COMPONENT
    mode = Mode(mode)
    if mode is Mode.SINGLE_COMPONENT:
        lifting, seed = _single_component_lifting(q), SINGLE_SEED
    elif mode is Mode.MULTI_COMPONENT:
        lifting, seed = _multi_component_lifting(q), MULTI_SEED
    else:
        lifting, seed = _shapley_lifting(q), SHAPLEY_SEED
    return mode, lift(q, seed, lifting), lifting


def build_counterexample(q: BCQ, mode: Mode | str | None = None) -> Counterexample:
    """Instance on which the requested scores of ``q`` are not aligned.

    Builds the instance with :func:`construct_instance` and checks it;
    raises ``VerificationError`` when the scores turn out to be aligned.
    """
    mode, instance, lifting = construct_instance(q, mode)
    if mode is Mode.SHAPLEY_VS_CES_RESP:
        sh_ce = check_alignment(q, instance, "shapley", "ces")
        sh_rho = check_alignment(q, instance, "shapley", "resp")
        if sh_ce.aligned or sh_rho.aligned:
            raise VerificationError(f"generated instance does not separate Shapley for {q}")
        return Counterexample(mode, instance, sh_ce, lifting, (sh_rho,))
    verdict = check_alignment(q, instance, "ces", "resp")
    if verdict.aligned:
        raise VerificationError(f"generated instance is aligned for {q}")
    return Counterexample(mode, instance, verdict, lifting)


# ---------------------------------------------------------------------------
# Randomised search


def random_instance(
    q: BCQ,
    rng: random.Random,
    *,
    max_endo: int = 10,
    domain_size: int = 4,
    exogenous: bool = True,
) -> Instance:
    """Random instance over the query's relations with at most ``max_endo``
    endogenous tuples; exogenous tuples are optional."""
    domain = "abcd"[:domain_size] if domain_size <= 4 else [f"d{i}" for i in range(domain_size)]
    relations = q.relations()
    seen: set[tuple[str, tuple[str, ...]]] = set()
    facts: list[Fact] = []
    n_endo = rng.randint(1, max_endo)
    n_exo = rng.randint(0, 3) if exogenous else 0
    attempts = 0
    while (n_endo or n_exo) and attempts < 200:
        attempts += 1
        rel = rng.choice(sorted(relations))
        values = tuple(rng.choice(domain) for _ in range(relations[rel]))
        if (rel, values) in seen:
            continue
        seen.add((rel, values))
        endogenous = n_endo > 0 and (n_exo == 0 or rng.random() < 0.75)
        if endogenous:
            n_endo -= 1
        else:
            n_exo -= 1
        facts.append(Fact(f"t{len(facts) + 1}", rel, values, endogenous))
    return Instance(Schema.of(relations), tuple(facts))


@dataclass(frozen=True)
class SearchResult:
    seed: int
    trials: int
    violations: tuple[tuple[int, Instance, AlignmentVerdict], ...]


def search_violations(
    q: BCQ,
    sc1: str = "ces",
    sc2: str = "resp",
    *,
    trials: int = 500,
    seed: int = 0,
    max_endo: int = 10,
    domain_size: int = 4,
    exogenous: bool = True,
    stop_at_first: bool = False,
) -> SearchResult:
    rng = random.Random(seed)
    found = []
    for trial in range(trials):
        d = random_instance(q, rng, max_endo=max_endo, domain_size=domain_size, exogenous=exogenous)
        verdict = check_alignment(q, d, sc1, sc2)
        if not verdict.aligned:
            found.append((trial, d, verdict))
            if stop_at_first:
                break
    return SearchResult(seed, trials, tuple(found))

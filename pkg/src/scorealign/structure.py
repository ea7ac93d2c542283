"""Syntactic analysis of conjunctive queries: components, coincident
variables, reduced forms, and alignment classification."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .engine import atom_components
from .errors import UnsupportedQueryError
from .relational import BCQ, Atom, Fact, Instance, Schema, Var, is_self_join_free


def _require_plain(q: BCQ) -> None:
    if not is_self_join_free(q):
        raise UnsupportedQueryError("unsupported: self-join", "self-join")
    if q.has_constants():
        raise UnsupportedQueryError(
            "unsupported: constants in query (eliminate them first)", "constants"
        )


@dataclass(frozen=True)
class Component:
    atom_indices: tuple[int, ...]
    subquery: BCQ


def components(q: BCQ) -> list[Component]:
    """Connected components of the atom graph, ordered by first atom."""
    return [
        Component(tuple(group), BCQ(tuple(q.atoms[i] for i in group)))
        for group in atom_components(q)
    ]


def coincidences(q: BCQ) -> list[tuple[str, ...]]:
    """Partition of the variables by the set of atoms they occur in."""
    cells: dict[frozenset[int], list[str]] = {}
    for v in q.variables():
        cells.setdefault(q.atoms_of(v), []).append(v)
    return [tuple(cell) for cell in cells.values()]


@dataclass(frozen=True)
class QueryStructure:
    components: tuple[Component, ...]
    coincidences: tuple[tuple[str, ...], ...]
    self_join_free: bool
    has_constants: bool


def analyze(q: BCQ) -> QueryStructure:
    return QueryStructure(
        tuple(components(q)),
        tuple(coincidences(q)),
        is_self_join_free(q),
        q.has_constants(),
    )


# ---------------------------------------------------------------------------
# Reduction


@dataclass(frozen=True)
class _Collapse:
    """How one atom is rewritten: new name and, per output position, either
    an original position or a collapsed cell."""

    relation: str
    outputs: tuple[tuple[str, object], ...]


def _plan_reduction(q: BCQ) -> tuple[BCQ, dict[str, _Collapse], list[tuple[str, ...]]]:
    cells = [c for c in coincidences(q) if len(c) > 1]
    cell_of = {v: cell for cell in cells for v in cell}
    taken = {a.relation for a in q.atoms}
    atoms: list[Atom] = []
    plans: dict[str, _Collapse] = {}
    for atom in q.atoms:
        outputs: list[tuple[str, object]] = []
        terms = []
        placed: set[tuple[str, ...]] = set()
        for pos, term in enumerate(atom.terms):
            cell = cell_of.get(term.name)
            if cell is None:
                outputs.append(("pos", pos))
                terms.append(term)
            elif cell not in placed:
                placed.add(cell)
                outputs.append(("cell", cell))
                terms.append(Var(cell[0]))
        name = atom.relation
        if placed:
            name = atom.relation + "_red"
            while name in taken:
                name += "_"
            taken.add(name)
        plans[atom.relation] = _Collapse(name, tuple(outputs))
        atoms.append(Atom(name, tuple(terms)))
    return BCQ(tuple(atoms)), plans, cells


def reduce_query(q: BCQ) -> BCQ:
    """Reduced form: every coincidence cell replaced by a single variable.

    The new variable keeps the name of the cell's first variable and sits
    where the cell first appears in each atom.
    """
    _require_plain(q)
    return _plan_reduction(q)[0]


@dataclass(frozen=True)
class ReductionResult:
    query: BCQ
    instance: Instance
    tuple_map: Mapping[str, str]
    constant_table: Mapping[tuple, str] = field(default_factory=dict)


def reduce(q: BCQ, d: Instance) -> ReductionResult:
    """Reduce the query and rewrite the instance to match.

    Each combination of values taken by a collapsed cell (read in the
    cell's variable order) becomes one fresh constant ``c1, c2, ...``,
    numbered by first occurrence in tuple load order and skipping names
    already in the active domain.  A tuple whose repeated variable positions
    disagree can never be matched; it receives a private fresh constant.
    Tuple ids and endogenous flags are preserved.
    """
    _require_plain(q)
    reduced, plans, cells = _plan_reduction(q)
    if not cells:
        return ReductionResult(q, d, {f.id: f.id for f in d.facts}, {})
    atom_of = {a.relation: a for a in q.atoms}
    domain = d.active_domain()
    table: dict[tuple, str] = {}
    counter = 0

    def fresh(key):
        nonlocal counter
        if key not in table:
            while True:
                counter += 1
                name = f"c{counter}"
                if name not in domain:
                    break
            table[key] = name
        return table[key]

    arities = {name: arity for name, arity in d.schema.arities if name not in plans}
    for atom in reduced.atoms:
        arities[atom.relation] = atom.arity
    facts = []
    for f in d.facts:
        plan = plans.get(f.relation)
        if plan is None or plan.relation == f.relation:
            facts.append(f)
            continue
        atom = atom_of[f.relation]
        values = []
        for kind, ref in plan.outputs:
            if kind == "pos":
                values.append(f.values[ref])
                continue
            per_var = []
            for v in ref:
                seen = {f.values[i] for i, t in enumerate(atom.terms) if t.name == v}
                per_var.append(seen.pop() if len(seen) == 1 else None)
            if None in per_var:
                values.append(fresh(("unmatchable", f.id)))
            else:
                values.append(fresh(tuple(per_var)))
        facts.append(Fact(f.id, plan.relation, tuple(values), f.endogenous, f.prob))
    instance = Instance(Schema.of(arities), tuple(facts))
    return ReductionResult(reduced, instance, {f.id: f.id for f in d.facts}, table)


# ---------------------------------------------------------------------------
# Classification


class Status(enum.Enum):
    ALWAYS_ALIGNED = "AlwaysAligned"
    NOT_ALWAYS_ALIGNED = "NotAlwaysAligned"
    UNKNOWN = "Unknown"


class Reason(enum.Enum):
    SINGLE_COINCIDENCE = "one component whose variables all occur in the same atoms"
    SINGLE_ATOM_COMPONENTS = "several components, each a single atom"
    COINCIDENCE_SPLIT = "one component with at least two coincidence cells"
    MULTI_ATOM_COMPONENT = "several components, one of them with two or more atoms"
    TWO_ATOMS_FEW_COINCIDENCES = "one component, at most two atoms and three coincidence cells"
    BINARY_WITH_UNARY_STAR = "reduced form is a binary atom R(v,w) plus unary atoms on v"


@dataclass(frozen=True)
class Verdict:
    status: Status
    reason: Reason | None = None


@dataclass(frozen=True)
class ClassificationVerdict:
    with_exogenous: Verdict
    without_exogenous: Verdict
    structure: QueryStructure
    reduced: BCQ


def _is_binary_with_unary_star(reduced: BCQ) -> bool:
    binary = [a for a in reduced.atoms if a.arity == 2]
    unary = [a for a in reduced.atoms if a.arity == 1]
    if len(binary) != 1 or not unary or len(binary) + len(unary) != len(reduced.atoms):
        return False
    left, right = binary[0].terms
    hubs = {a.terms[0] for a in unary}
    return left != right and len(hubs) == 1 and hubs <= {left, right}


def classify(q: BCQ) -> ClassificationVerdict:
    """Decide whether (ces, resp) alignment is guaranteed for every instance.

    ``with_exogenous`` is a complete answer for instances that may contain
    exogenous tuples; ``without_exogenous`` only reports the known positive
    cases and is Unknown otherwise.
    """
    _require_plain(q)
    info = analyze(q)
    n = len(info.components)
    n_cells = len(info.coincidences)
    reduced = _plan_reduction(q)[0]

    if n == 1 and n_cells == 1:
        with_ex = Verdict(Status.ALWAYS_ALIGNED, Reason.SINGLE_COINCIDENCE)
    elif n >= 2 and all(len(c.atom_indices) == 1 for c in info.components):
        with_ex = Verdict(Status.ALWAYS_ALIGNED, Reason.SINGLE_ATOM_COMPONENTS)
    elif n == 1:
        with_ex = Verdict(Status.NOT_ALWAYS_ALIGNED, Reason.COINCIDENCE_SPLIT)
    else:
        with_ex = Verdict(Status.NOT_ALWAYS_ALIGNED, Reason.MULTI_ATOM_COMPONENT)

    if with_ex.status is Status.ALWAYS_ALIGNED:
        without_ex = with_ex
    elif n == 1 and len(q.atoms) <= 2 and n_cells <= 3:
        without_ex = Verdict(Status.ALWAYS_ALIGNED, Reason.TWO_ATOMS_FEW_COINCIDENCES)
    elif _is_binary_with_unary_star(reduced):
        without_ex = Verdict(Status.ALWAYS_ALIGNED, Reason.BINARY_WITH_UNARY_STAR)
    else:
        without_ex = Verdict(Status.UNKNOWN)
    return ClassificationVerdict(with_ex, without_ex, info, reduced)


def rename_variables(q: BCQ, mapping: Mapping[str, str]) -> BCQ:
    return BCQ(
        tuple(
            Atom(a.relation, tuple(Var(mapping.get(t.name, t.name)) if isinstance(t, Var) else t for t in a.terms))
            for a in q.atoms
        )
    )


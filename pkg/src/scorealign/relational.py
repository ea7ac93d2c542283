"""Relational instances, Boolean queries and their evaluation.

A world is an ``int`` bitmask over the endogenous tuples of an instance, in
load order: bit ``i`` is set when the ``i``-th endogenous tuple is present.
Exogenous tuples are always present and never appear in a world.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

from .errors import (
    InstanceFormatError,
    QueryMismatchError,
    QuerySyntaxError,
    UnsupportedQueryError,
)

World = int


# ---------------------------------------------------------------------------
# Queries


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: str

    def __str__(self):
        return "'" + self.value + "'"


Term = Union[Var, Const]


@dataclass(frozen=True)
class Atom:
    relation: str
    terms: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.terms)

    def variables(self) -> tuple[str, ...]:
        """Distinct variable names in positional order."""
        seen: dict[str, None] = {}
        for term in self.terms:
            if isinstance(term, Var):
                seen.setdefault(term.name)
        return tuple(seen)

    def has_constants(self) -> bool:
        return any(isinstance(t, Const) for t in self.terms)

    def __str__(self):
        return f"{self.relation}({','.join(map(str, self.terms))})"


@dataclass(frozen=True)
class BCQ:
    """Boolean conjunctive query; all variables are existentially quantified."""

    atoms: tuple[Atom, ...]

    def variables(self) -> tuple[str, ...]:
        """Distinct variables in order of first occurrence."""
        seen: dict[str, None] = {}
        for atom in self.atoms:
            for name in atom.variables():
                seen.setdefault(name)
        return tuple(seen)

    def atoms_of(self, variable: str) -> frozenset[int]:
        """Indices of the atoms mentioning ``variable``."""
        return frozenset(i for i, a in enumerate(self.atoms) if variable in a.variables())

    def relations(self) -> dict[str, int]:
        return {a.relation: a.arity for a in self.atoms}

    def has_constants(self) -> bool:
        return any(a.has_constants() for a in self.atoms)

    def __str__(self):
        return ", ".join(map(str, self.atoms))


@dataclass(frozen=True)
class Reachability:
    """True when ``target`` is reachable from ``source`` along edge tuples.

    Reachability is reflexive: a node always reaches itself.
    """

    edge_relation: str
    source: str
    target: str

    def __str__(self):
        return f"reach[{self.edge_relation}]({self.source} -> {self.target})"


MonotoneQuery = Union[BCQ, Reachability]


_TOKEN = re.compile(
    r"\s*(?:(?P<rel>[A-Z][A-Za-z0-9_]*)|(?P<var>[a-z][A-Za-z0-9_]*)"
    r"|'(?P<const>[^']*)'|(?P<punct>[(),]))"
)


class _QueryParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _error(self, message):
        """Syntax error at the current 1-based column."""
        return QuerySyntaxError(message, self.pos + 1)

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip()
        if self.pos >= len(self.text):
            return None, None
        m = _TOKEN.match(self.text, self.pos)
        if m is None:
            raise self._error(f"unexpected character {self.text[self.pos]!r}")
        return m.lastgroup, m

    def _expect_punct(self, char):
        kind, m = self._peek()
        if kind != "punct" or m.group("punct") != char:
            raise self._error(f"expected {char!r}")
        self.pos = m.end()

    def parse(self) -> BCQ:
        atoms = [self._atom()]
        while True:
            kind, m = self._peek()
            if kind is None:
                break
            if kind == "punct" and m.group("punct") == ",":
                self.pos = m.end()
                atoms.append(self._atom())
            else:
                raise self._error("expected ',' or end of query")
        return _make_bcq(atoms)

    def _atom(self) -> Atom:
        kind, m = self._peek()
        if kind != "rel":
            raise self._error("expected relation name")
        self.pos = m.end()
        relation = m.group("rel")
        self._expect_punct("(")
        terms = [self._term()]
        while True:
            kind, m = self._peek()
            if kind == "punct" and m.group("punct") == ",":
                self.pos = m.end()
                terms.append(self._term())
                continue
            self._expect_punct(")")
            return Atom(relation, tuple(terms))

    def _term(self) -> Term:
        kind, m = self._peek()
        if kind == "var":
            self.pos = m.end()
            return Var(m.group("var"))
        if kind == "const":
            self.pos = m.end()
            return Const(m.group("const"))
        raise self._error("expected variable or constant")


def _make_bcq(atoms: Iterable[Atom]) -> BCQ:
    unique: dict[Atom, None] = {}
    arities: dict[str, int] = {}
    for atom in atoms:
        known = arities.setdefault(atom.relation, atom.arity)
        if known != atom.arity:
            raise QueryMismatchError(
                f"relation {atom.relation} used with arities {known} and {atom.arity}"
            )
        unique.setdefault(atom)
    return BCQ(tuple(unique))


def parse_query(text: str) -> BCQ:
    """Parse ``R(x,y), S(x,'c')`` style text into a BCQ.

    Duplicate atoms collapse to one since conjunction is idempotent.
    """
    return _QueryParser(text).parse()


def parse_reachability(spec: str) -> Reachability:
    """Parse ``E,a,b`` into a reachability query from ``a`` to ``b`` over ``E``."""
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 3 or not all(parts):
        raise QuerySyntaxError("reachability spec must be REL,source,target", 1)
    return Reachability(*parts)


def is_self_join_free(q: BCQ) -> bool:
    names = [a.relation for a in q.atoms]
    return len(names) == len(set(names))


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class Schema:
    arities: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, relations: Mapping[str, int]) -> "Schema":
        return cls(tuple(relations.items()))

    def arity(self, relation: str) -> int | None:
        return dict(self.arities).get(relation)

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.arities)


@dataclass(frozen=True)
class Fact:
    id: str
    relation: str
    values: tuple[str, ...]
    endogenous: bool = True
    prob: Fraction | None = None

    def __str__(self):
        return f"{self.relation}({','.join(self.values)})"


@dataclass(frozen=True)
class Instance:
    """Finite set of identified tuples split into endogenous and exogenous parts."""

    schema: Schema
    facts: tuple[Fact, ...]
    _endo: tuple[str, ...] = field(init=False, repr=False, compare=False)
    _bit: dict = field(init=False, repr=False, compare=False)
    _by_id: dict = field(init=False, repr=False, compare=False)
    _by_rel: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id: dict[str, Fact] = {}
        by_rel: dict[str, list[Fact]] = {name: [] for name in self.schema.names()}
        seen: set[tuple[str, tuple[str, ...]]] = set()
        for f in self.facts:
            arity = self.schema.arity(f.relation)
            if arity is None:
                raise InstanceFormatError(f"tuple {f.id}: unknown relation {f.relation}")
            if len(f.values) != arity:
                raise InstanceFormatError(
                    f"tuple {f.id}: {len(f.values)} values for {f.relation} of arity {arity}"
                )
            if f.id in by_id:
                raise InstanceFormatError(f"duplicate tuple id {f.id}")
            if (f.relation, f.values) in seen:
                raise InstanceFormatError(f"duplicate tuple {f} (id {f.id})")
            if f.prob is not None and not 0 <= f.prob <= 1:
                raise InstanceFormatError(f"tuple {f.id}: probability {f.prob} outside [0,1]")
            seen.add((f.relation, f.values))
            by_id[f.id] = f
            by_rel[f.relation].append(f)
        endo = tuple(f.id for f in self.facts if f.endogenous)
        object.__setattr__(self, "_endo", endo)
        object.__setattr__(self, "_bit", {tid: i for i, tid in enumerate(endo)})
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_by_rel", {k: tuple(v) for k, v in by_rel.items()})

    @classmethod
    def build(cls, facts: Iterable[Fact], schema: Mapping[str, int] | None = None) -> "Instance":
        """Instance from facts, inferring arities for relations not in ``schema``."""
        facts = tuple(facts)
        arities = dict(schema or {})
        for f in facts:
            arities.setdefault(f.relation, len(f.values))
        return cls(Schema.of(arities), facts)

    @property
    def endogenous_ids(self) -> tuple[str, ...]:
        return self._endo

    @property
    def exogenous_ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self.facts if not f.endogenous)

    @property
    def n_endogenous(self) -> int:
        return len(self._endo)

    @property
    def full_world(self) -> World:
        return (1 << len(self._endo)) - 1

    def fact(self, tuple_id: str) -> Fact:
        try:
            return self._by_id[tuple_id]
        except KeyError:
            raise InstanceFormatError(f"unknown tuple id {tuple_id}") from None

    def __contains__(self, tuple_id: str) -> bool:
        return tuple_id in self._by_id

    def facts_of(self, relation: str) -> tuple[Fact, ...]:
        return self._by_rel.get(relation, ())

    def bit(self, tuple_id: str) -> int:
        """Position of an endogenous tuple in world bitmasks."""
        if tuple_id not in self._by_id:
            raise InstanceFormatError(f"unknown tuple id {tuple_id}")
        try:
            return self._bit[tuple_id]
        except KeyError:
            raise InstanceFormatError(f"tuple {tuple_id} is exogenous") from None

    def world(self, tuple_ids: Iterable[str]) -> World:
        w = 0
        for tid in tuple_ids:
            w |= 1 << self.bit(tid)
        return w

    def world_ids(self, w: World) -> tuple[str, ...]:
        return tuple(tid for i, tid in enumerate(self._endo) if w >> i & 1)

    def active_domain(self) -> frozenset[str]:
        return frozenset(v for f in self.facts for v in f.values)

    def present(self, w: World) -> Iterator[Fact]:
        """Facts of the sub-instance ``w`` together with all exogenous facts."""
        for f in self.facts:
            if not f.endogenous or w >> self._bit[f.id] & 1:
                yield f

    def restrict(self, tuple_ids: Iterable[str]) -> "Instance":
        """Sub-instance keeping only the given tuples, in load order."""
        keep = set(tuple_ids)
        return Instance(self.schema, tuple(f for f in self.facts if f.id in keep))

    def without(self, tuple_ids: Iterable[str]) -> "Instance":
        drop = set(tuple_ids)
        return Instance(self.schema, tuple(f for f in self.facts if f.id not in drop))


def _parse_prob(raw, tuple_id) -> Fraction | None:
    if raw is None:
        return None
    try:
        if isinstance(raw, float):
            raw = repr(raw)
        return Fraction(raw)
    except (ValueError, ZeroDivisionError, TypeError):
        raise InstanceFormatError(f"tuple {tuple_id}: unreadable probability {raw!r}") from None


def load_instance(document: str | bytes | Mapping) -> Instance:
    """Build an instance from the JSON document format (text or parsed)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(document, Mapping) or not isinstance(document.get("relations"), list):
        raise InstanceFormatError("document needs a 'relations' list")
    arities: dict[str, int] = {}
    facts: list[Fact] = []
    for rel in document["relations"]:
        try:
            name, arity = rel["name"], rel["arity"]
        except (KeyError, TypeError):
            raise InstanceFormatError("relation entries need 'name' and 'arity'") from None
        if not isinstance(arity, int) or arity < 1:
            raise InstanceFormatError(f"relation {name}: arity must be a positive integer")
        if name in arities:
            raise InstanceFormatError(f"relation {name} declared twice")
        arities[name] = arity
        for t in rel.get("tuples", []):
            try:
                tid, values = str(t["id"]), tuple(str(v) for v in t["values"])
            except (KeyError, TypeError):
                raise InstanceFormatError(f"relation {name}: tuples need 'id' and 'values'") from None
            facts.append(
                Fact(tid, name, values, bool(t.get("endogenous", True)), _parse_prob(t.get("p"), tid))
            )
    return Instance(Schema.of(arities), tuple(facts))


def instance_document(d: Instance, provenance: Mapping | None = None) -> dict:
    relations = []
    for name, arity in d.schema.arities:
        tuples = []
        for f in d.facts_of(name):
            entry = {"id": f.id, "values": list(f.values), "endogenous": f.endogenous}
            if f.prob is not None:
                entry["p"] = str(f.prob)
            tuples.append(entry)
        relations.append({"name": name, "arity": arity, "tuples": tuples})
    doc: dict = {"relations": relations}
    if provenance is not None:
        doc["provenance"] = dict(provenance)
    return doc


def dump_instance(d: Instance, provenance: Mapping | None = None) -> str:
    return json.dumps(instance_document(d, provenance), indent=2)


# ---------------------------------------------------------------------------
# Evaluation


def check_compatible(q: MonotoneQuery, d: Instance) -> None:
    if isinstance(q, Reachability):
        arity = d.schema.arity(q.edge_relation)
        if arity is not None and arity != 2:
            raise QueryMismatchError(f"edge relation {q.edge_relation} must be binary")
        return
    for atom in q.atoms:
        arity = d.schema.arity(atom.relation)
        if arity is not None and arity != atom.arity:
            raise QueryMismatchError(
                f"atom {atom} has arity {atom.arity}, instance declares {arity}"
            )


def _matches(atom: Atom, values: tuple[str, ...], binding: dict[str, str]) -> dict[str, str] | None:
    extended = None
    for term, value in zip(atom.terms, values):
        if isinstance(term, Const):
            if term.value != value:
                return None
            continue
        bound = binding.get(term.name) if extended is None else extended.get(term.name)
        if bound is None:
            if extended is None:
                extended = dict(binding)
            extended[term.name] = value
        elif bound != value:
            return None
    return binding if extended is None else extended


def homomorphisms(
    atoms: tuple[Atom, ...], facts_of
) -> Iterator[tuple[dict[str, str], tuple[Fact, ...]]]:
    """Yield every variable assignment mapping all atoms into the facts.

    ``facts_of(relation)`` supplies the candidate facts.  Along with each
    assignment comes the image fact of each atom, in the order of ``atoms``.
    Atoms are joined in ascending order of candidate count.
    """
    candidates = []
    for atom in atoms:
        cands = [f for f in facts_of(atom.relation) if _matches(atom, f.values, {}) is not None]
        if not cands:
            return
        candidates.append(cands)
    order = sorted(range(len(atoms)), key=lambda i: len(candidates[i]))
    image: list[Fact | None] = [None] * len(atoms)

    def extend(depth, binding):
        if depth == len(order):
            yield binding, tuple(image)
            return
        i = order[depth]
        for f in candidates[i]:
            nxt = _matches(atoms[i], f.values, binding)
            if nxt is not None:
                image[i] = f
                yield from extend(depth + 1, nxt)

    yield from extend(0, {})


def _reachable(edges: Iterable[Fact], source: str, target: str) -> bool:
    if source == target:
        return True
    adjacency: dict[str, list[str]] = {}
    for f in edges:
        adjacency.setdefault(f.values[0], []).append(f.values[1])
    seen = {source}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        for nxt in adjacency.get(node, ()):
            if nxt == target:
                return True
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def evaluate(q: MonotoneQuery, d: Instance, w: World) -> bool:
    """Truth value of ``q`` on the world ``w`` plus all exogenous tuples."""
    check_compatible(q, d)
    present = {f.id for f in d.present(w)}
    if isinstance(q, Reachability):
        edges = (f for f in d.facts_of(q.edge_relation) if f.id in present)
        return _reachable(edges, q.source, q.target)

    def facts_of(relation):
        return [f for f in d.facts_of(relation) if f.id in present]

    return next(homomorphisms(q.atoms, facts_of), None) is not None


# ---------------------------------------------------------------------------
# Constant elimination


def _fresh_name(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "_"
    taken.add(name)
    return name


def eliminate_constants(q: BCQ, d: Instance) -> tuple[BCQ, Instance, dict[str, str]]:
    """Drop constant positions from atoms, projecting the matching tuples.

    Each atom carrying constants gets a fresh relation of lower arity holding
    the tuples that agree with those constants, minus the constant columns.
    Returns the new query, the new instance and a map from surviving original
    tuple ids to new ids (ids are kept).  Tuples that cannot match a constant
    are dropped; they never contribute to the query anyway.
    """
    if not q.has_constants():
        return q, d, {f.id: f.id for f in d.facts}
    rewritten_rels = [a.relation for a in q.atoms if a.has_constants()]
    for rel in rewritten_rels:
        if sum(a.relation == rel for a in q.atoms) > 1:
            raise UnsupportedQueryError(
                f"relation {rel} carries constants and occurs in several atoms", "self-join"
            )
    taken = set(d.schema.names()) | {a.relation for a in q.atoms}
    atoms: list[Atom] = []
    renamed: dict[str, tuple[str, tuple[int, ...], tuple[tuple[int, str], ...]]] = {}
    for atom in q.atoms:
        if not atom.has_constants():
            atoms.append(atom)
            continue
        keep = tuple(i for i, t in enumerate(atom.terms) if isinstance(t, Var))
        if not keep:
            raise UnsupportedQueryError(f"atom {atom} has no variables", "ground-atom")
        fixed = tuple((i, t.value) for i, t in enumerate(atom.terms) if isinstance(t, Const))
        new_rel = _fresh_name(atom.relation + "_sel", taken)
        renamed[atom.relation] = (new_rel, keep, fixed)
        atoms.append(Atom(new_rel, tuple(atom.terms[i] for i in keep)))

    arities = {name: arity for name, arity in d.schema.arities if name not in renamed}
    for atom in atoms:
        arities.setdefault(atom.relation, atom.arity)
    facts: list[Fact] = []
    mapping: dict[str, str] = {}
    for f in d.facts:
        if f.relation in renamed:
            new_rel, keep, fixed = renamed[f.relation]
            if any(f.values[i] != c for i, c in fixed):
                continue
            f = Fact(f.id, new_rel, tuple(f.values[i] for i in keep), f.endogenous, f.prob)
        facts.append(f)
        mapping[f.id] = f.id
    return BCQ(tuple(atoms)), Instance(Schema.of(arities), tuple(facts)), mapping


def strip_constants(q: BCQ) -> BCQ:
    """Query-only form of :func:`eliminate_constants`."""
    return eliminate_constants(q, Instance(Schema(), ()))[0]

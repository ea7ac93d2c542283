"""Compile a query over an instance into a truth table over all worlds.

The query is first reduced to its witnesses: the endogenous parts of the
homomorphic images (BCQs) or of the simple source-target paths
(reachability).  A world satisfies the query iff it contains a witness, so
the table is the superset closure of the witness masks.  For a BCQ with
several connected components, each component gets its own table and the
results are intersected, which keeps witness enumeration small.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import CapExceededError
from .relational import BCQ, Instance, MonotoneQuery, Reachability, check_compatible, homomorphisms

DEFAULT_MAX_ENDO = 26


def check_cap(d: Instance, max_endo: int | None) -> None:
    limit = DEFAULT_MAX_ENDO if max_endo is None else max_endo
    if d.n_endogenous > limit:
        raise CapExceededError(
            f"{d.n_endogenous} endogenous tuples exceed the enumeration limit of {limit}"
        )


def atom_components(q: BCQ) -> list[list[int]]:
    """Atom indices grouped by connected component (shared variables)."""
    parent = list(range(len(q.atoms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[str, int] = {}
    for i, atom in enumerate(q.atoms):
        for v in atom.variables():
            if v in owner:
                parent[find(i)] = find(owner[v])
            else:
                owner[v] = i
    groups: dict[int, list[int]] = {}
    for i in range(len(q.atoms)):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _bcq_witnesses(atoms, d: Instance) -> set[int]:
    masks = set()
    for _, image in homomorphisms(atoms, d.facts_of):
        mask = 0
        for f in image:
            if f.endogenous:
                mask |= 1 << d.bit(f.id)
        masks.add(mask)
    return masks


def _path_witnesses(q: Reachability, d: Instance) -> set[int]:
    if q.source == q.target:
        return {0}
    adjacency: dict[str, list[tuple[str, int]]] = {}
    for f in d.facts_of(q.edge_relation):
        mask = 1 << d.bit(f.id) if f.endogenous else 0
        adjacency.setdefault(f.values[0], []).append((f.values[1], mask))
    masks = set()
    on_path = {q.source}

    def walk(node, mask):
        for nxt, edge in adjacency.get(node, ()):
            if nxt == q.target:
                masks.add(mask | edge)
            elif nxt not in on_path:
                on_path.add(nxt)
                walk(nxt, mask | edge)
                on_path.remove(nxt)

    walk(q.source, 0)
    return masks


def witness_families(q: MonotoneQuery, d: Instance) -> list[set[int]]:
    """One witness family per independent part of the query.

    The query holds on a world iff, for every family, the world contains
    at least one of its masks.
    """
    check_compatible(q, d)
    if isinstance(q, Reachability):
        return [_path_witnesses(q, d)]
    return [_bcq_witnesses(tuple(q.atoms[i] for i in comp), d) for comp in atom_components(q)]


def minimize(masks) -> list[int]:
    """Drop masks that strictly contain another mask; sorted ascending."""
    result: list[int] = []
    for m in sorted(set(masks), key=lambda m: (bin(m).count("1"), m)):
        if not any(k & m == k for k in result):
            result.append(m)
    return sorted(result)


@lru_cache(maxsize=8)
def minimal_witnesses(q: MonotoneQuery, d: Instance) -> tuple[int, ...]:
    """Minimal satisfying worlds computed symbolically from the witnesses."""
    combined = {0}
    for family in witness_families(q, d):
        fam = minimize(family)
        combined = set(minimize(a | b for a in combined for b in fam))
    return tuple(sorted(combined))


@dataclass(frozen=True)
class Compiled:
    n: int
    table: np.ndarray

    def holds(self, w: int) -> bool:
        return bool(self.table[w])


@lru_cache(maxsize=8)
def _compile(q: MonotoneQuery, d: Instance) -> Compiled:
    n = d.n_endogenous
    table = np.ones(1 << n, dtype=np.bool_)
    for family in witness_families(q, d):
        part = np.zeros(1 << n, dtype=np.bool_)
        if family:
            part[np.fromiter(family, dtype=np.int64, count=len(family))] = True
        kernels.superset_closure(part, n)
        table &= part
    table.flags.writeable = False
    return Compiled(n, table)


def compile_query(q: MonotoneQuery, d: Instance, max_endo: int | None = None) -> Compiled:
    """Truth table of ``q`` over all worlds of ``d`` (cached)."""
    check_cap(d, max_endo)
    return _compile(q, d)


@lru_cache(maxsize=8)
def _swing_counts(q: MonotoneQuery, d: Instance) -> np.ndarray:
    compiled = _compile(q, d)
    counts = kernels.swing_counts(compiled.table, compiled.n)
    counts.flags.writeable = False
    return counts


def swing_counts(q: MonotoneQuery, d: Instance, max_endo: int | None = None) -> np.ndarray:
    """Swinging-world counts per endogenous tuple and size (see kernels)."""
    check_cap(d, max_endo)
    return _swing_counts(q, d)

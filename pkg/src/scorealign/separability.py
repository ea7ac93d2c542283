"""Splitting an instance into independent blocks and composing scores.

Blocks partition the endogenous tuples.  Every block is evaluated together
with all exogenous tuples, which are present in every world anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .engine import check_cap
from .errors import DomainError
from .pdb import query_probability, uniform_half_tid
from .relational import Instance, MonotoneQuery, evaluate
from .scores import ces, mss, responsibility


@dataclass(frozen=True)
class SeparablePartition:
    blocks: tuple[frozenset[str], ...]
    residual: frozenset[str] = frozenset()

    def block_of(self, tuple_id: str) -> frozenset[str]:
        for block in self.blocks:
            if tuple_id in block:
                return block
        raise DomainError(f"tuple {tuple_id} is in no block")


def block_instance(d: Instance, block: Iterable[str]) -> Instance:
    """Sub-instance made of the block and every exogenous tuple."""
    keep = set(block) | set(d.exogenous_ids)
    return d.restrict(keep)


def _mss_ids(q: MonotoneQuery, d: Instance) -> set[frozenset[str]]:
    return {frozenset(d.world_ids(w)) for w in mss(q, d)}


def is_separable(q: MonotoneQuery, d: Instance, partition: SeparablePartition) -> bool:
    """Whether the minimal satisfying sets of the whole instance are exactly
    those of the blocks."""
    covered = set().union(*partition.blocks) if partition.blocks else set()
    if covered != set(d.endogenous_ids):
        return False
    union: set[frozenset[str]] = set()
    for block in partition.blocks:
        union |= _mss_ids(q, block_instance(d, block))
    return union == _mss_ids(q, d)


def find_separable_partition(
    q: MonotoneQuery, d: Instance, *, max_endo: int | None = None
) -> SeparablePartition:
    """Finest partition grouping tuples that share a minimal satisfying set.

    Tuples belonging to no minimal satisfying set form one extra residual
    block.  If the query is false on the whole instance, a single block is
    returned.
    """
    check_cap(d, max_endo)
    ids = d.endogenous_ids
    if not evaluate(q, d, d.full_world) or not ids:
        return SeparablePartition((frozenset(ids),) if ids else ())
    parent = {t: t for t in ids}

    def find(t):
        while parent[t] != t:
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    in_some = set()
    for w in mss(q, d, max_endo=max_endo):
        members = d.world_ids(w)
        in_some.update(members)
        for a, b in zip(members, members[1:]):
            parent[find(b)] = find(a)
    groups: dict[str, list[str]] = {}
    for t in ids:
        if t in in_some:
            groups.setdefault(find(t), []).append(t)
    blocks = [frozenset(g) for g in groups.values()]
    residual = frozenset(t for t in ids if t not in in_some)
    if residual:
        blocks.append(residual)
    partition = SeparablePartition(tuple(blocks), residual)
    if not is_separable(q, d, partition):
        partition = SeparablePartition((frozenset(ids),))
    return partition


def resilience_r(
    q: MonotoneQuery, d: Instance, complement: Iterable[str], *, max_endo: int | None = None
) -> int:
    """Fewest tuples to delete from ``complement`` to make the query false on it.

    The query is evaluated on the sub-instance formed by ``complement`` and
    the exogenous tuples.
    """
    sub = block_instance(d, complement)
    check_cap(sub, max_endo)
    full = sub.full_world
    if not evaluate(q, sub, full):
        return 0
    bits = [1 << i for i in range(sub.n_endogenous)]
    for size in range(1, len(bits) + 1):
        for gamma in combinations(bits, size):
            if not evaluate(q, sub, full & ~sum(gamma)):
                return size
    raise DomainError("query cannot be falsified within the complement")


def compositional_scores(
    q: MonotoneQuery,
    d: Instance,
    partition: SeparablePartition,
    tuple_id: str,
    *,
    max_endo: int | None = None,
) -> tuple[Fraction, Fraction]:
    """(responsibility, causal effect) of a tuple from its block alone.

    ρ = ρ_k / (1 + ρ_k · r) where ρ_k is computed inside the tuple's block
    and r is the resilience of the rest; the causal effect is the in-block
    effect times the probability that the rest does not satisfy the query.
    """
    block = partition.block_of(tuple_id)
    if not is_separable(q, d, partition):
        raise DomainError("partition is not separable for this query")
    local = block_instance(d, block)
    rho_k = responsibility(q, local, tuple_id, max_endo=max_endo)[0]
    ce_k = ces(q, local, tuple_id, max_endo=max_endo)
    if rho_k == 0:
        return Fraction(0), ce_k
    rest = [t for t in d.endogenous_ids if t not in block]
    r = resilience_r(q, d, rest, max_endo=max_endo)
    rest_instance = block_instance(d, rest)
    p_rest = query_probability(uniform_half_tid(rest_instance), q, max_endo)
    return rho_k / (1 + rho_k * r), ce_k * (1 - p_rest)

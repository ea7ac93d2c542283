"""Exact attribution scores for endogenous tuples.

Shapley and Banzhaf values are read off the swinging-world counts of the
compiled truth table.  The causal-effect score goes through the
probabilistic-database route (two interventions on the uniform 1/2 TID),
and responsibility through an explicit search for a smallest contingency
set, so the identities between them are checked across independent code.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Iterable, Mapping

import numpy as np

from .engine import check_cap, compile_query, minimal_witnesses, swing_counts
from .errors import CapExceededError, DomainError
from .kernels import minimal_worlds
from .pdb import Direction, intervene, query_probability, uniform_half_tid
from .relational import Instance, MonotoneQuery, World, evaluate

SCORE_NAMES = ("ces", "bpi", "shapley", "resp")


def _endogenous_bit(d: Instance, tuple_id: str) -> int:
    fact = d.fact(tuple_id)
    if not fact.endogenous:
        raise DomainError(f"scores are undefined for exogenous tuple {tuple_id}")
    return d.bit(tuple_id)


def delta(q: MonotoneQuery, d: Instance, s: World, tuple_id: str) -> int:
    """Marginal contribution of ``tuple_id`` to the coalition ``s``."""
    bit = 1 << _endogenous_bit(d, tuple_id)
    if s & bit:
        raise DomainError(f"coalition already contains {tuple_id}")
    return int(evaluate(q, d, s | bit)) - int(evaluate(q, d, s))


def shapley(q: MonotoneQuery, d: Instance, tuple_id: str, *, max_endo: int | None = None) -> Fraction:
    i = _endogenous_bit(d, tuple_id)
    counts = swing_counts(q, d, max_endo)[i]
    n = d.n_endogenous
    total = sum(int(c) * factorial(k) * factorial(n - k - 1) for k, c in enumerate(counts) if c)
    return Fraction(total, factorial(n))


def bpi(q: MonotoneQuery, d: Instance, tuple_id: str, *, max_endo: int | None = None) -> Fraction:
    i = _endogenous_bit(d, tuple_id)
    return Fraction(int(swing_counts(q, d, max_endo)[i].sum()), 1 << (d.n_endogenous - 1))


def ces(q: MonotoneQuery, d: Instance, tuple_id: str, *, max_endo: int | None = None) -> Fraction:
    """Causal effect under the uniform 1/2 TID: P(Q | do(in)) - P(Q | do(out))."""
    _endogenous_bit(d, tuple_id)
    base = uniform_half_tid(d)
    forced_in = query_probability(intervene(base, tuple_id, Direction.IN), q, max_endo)
    forced_out = query_probability(intervene(base, tuple_id, Direction.OUT), q, max_endo)
    return forced_in - forced_out


@dataclass(frozen=True)
class ContingencyWitness:
    tuple_id: str
    contingency: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.contingency)


def responsibility(
    q: MonotoneQuery,
    d: Instance,
    tuple_id: str,
    *,
    max_endo: int | None = None,
    max_contingency: int | None = None,
) -> tuple[Fraction, ContingencyWitness | None]:
    """Responsibility 1/(1+|Γ|) for a smallest contingency set Γ.

    Contingency sets are drawn from the other endogenous tuples by
    increasing size, each size in lexicographic load order; the first one
    found is returned as the witness.  Tuples outside every minimal
    satisfying set are not causes and get 0 without a search.
    """
    i = _endogenous_bit(d, tuple_id)
    bit = 1 << i
    if not any(m & bit for m in minimal_witnesses(q, d)):
        return Fraction(0), None
    table = compile_query(q, d, max_endo).table
    full = d.full_world
    others = [1 << j for j in range(d.n_endogenous) if j != i]
    limit = len(others) if max_contingency is None else min(max_contingency, len(others))
    for size in range(limit + 1):
        for gamma in combinations(others, size):
            w = full & ~sum(gamma)
            if table[w] and not table[w & ~bit]:
                ids = d.world_ids(sum(gamma))
                return Fraction(1, 1 + size), ContingencyWitness(tuple_id, ids)
    if limit < len(others):
        raise CapExceededError(f"no contingency set of size <= {limit} for {tuple_id}")
    return Fraction(0), None


def responsibility_from_counts(
    q: MonotoneQuery, d: Instance, tuple_id: str, *, max_endo: int | None = None
) -> Fraction:
    """Responsibility from the largest swinging world containing the tuple.

    A swinging world W gives the contingency set D^en minus W, so the
    smallest contingency corresponds to the largest swinging world.
    """
    i = _endogenous_bit(d, tuple_id)
    sizes = np.flatnonzero(swing_counts(q, d, max_endo)[i])
    if sizes.size == 0:
        return Fraction(0)
    largest = int(sizes[-1]) + 1
    return Fraction(1, 1 + d.n_endogenous - largest)


def swinging_sets(
    q: MonotoneQuery, d: Instance, tuple_id: str, *, max_endo: int | None = None
) -> tuple[World, ...]:
    """Worlds containing the tuple where removing it falsifies the query."""
    bit = 1 << _endogenous_bit(d, tuple_id)
    table = compile_query(q, d, max_endo).table
    worlds = np.arange(len(table), dtype=np.int64)
    with_tuple = (worlds & bit) != 0
    swinging = with_tuple & table & ~table[worlds & ~bit]
    return tuple(int(w) for w in np.flatnonzero(swinging))


def mss(q: MonotoneQuery, d: Instance, *, max_endo: int | None = None) -> tuple[World, ...]:
    """Minimal satisfying sets, as endogenous worlds sorted by bitmask."""
    compiled = compile_query(q, d, max_endo)
    return tuple(int(w) for w in minimal_worlds(compiled.table, compiled.n))


def is_dummy(q: MonotoneQuery, d: Instance, tuple_id: str, *, max_endo: int | None = None) -> bool:
    """True when adding the tuple never changes the query's value."""
    i = _endogenous_bit(d, tuple_id)
    table = compile_query(q, d, max_endo).table
    view = table.reshape(-1, 2, 1 << i)
    return not np.any(view[:, 1, :] & ~view[:, 0, :])


def is_counterfactual_cause(q: MonotoneQuery, d: Instance, tuple_id: str) -> bool:
    bit = 1 << _endogenous_bit(d, tuple_id)
    full = d.full_world
    return evaluate(q, d, full) and not evaluate(q, d, full & ~bit)


def is_actual_cause(q: MonotoneQuery, d: Instance, tuple_id: str) -> bool:
    """Some contingency set makes the tuple counterfactual."""
    return responsibility(q, d, tuple_id)[0] > 0


@dataclass(frozen=True)
class ScoreReport:
    query: str
    scores: tuple[str, ...]
    tuple_ids: tuple[str, ...]
    values: Mapping[str, Mapping[str, Fraction]]
    n_endogenous: int
    n_exogenous: int
    witnesses: Mapping[str, ContingencyWitness | None]

    def __getitem__(self, tuple_id: str) -> Mapping[str, Fraction]:
        return self.values[tuple_id]

    def column(self, score: str) -> dict[str, Fraction]:
        return {t: self.values[t][score] for t in self.tuple_ids}


def score_table(
    q: MonotoneQuery,
    d: Instance,
    scores: Iterable[str] = SCORE_NAMES,
    *,
    max_endo: int | None = None,
) -> ScoreReport:
    scores = tuple(scores)
    unknown = set(scores) - set(SCORE_NAMES)
    if unknown:
        raise DomainError(f"unknown scores: {', '.join(sorted(unknown))}")
    check_cap(d, max_endo)
    values: dict[str, dict[str, Fraction]] = {}
    witnesses: dict[str, ContingencyWitness | None] = {}
    for tid in d.endogenous_ids:
        row = {}
        for name in scores:
            if name == "ces":
                row[name] = ces(q, d, tid, max_endo=max_endo)
            elif name == "bpi":
                row[name] = bpi(q, d, tid, max_endo=max_endo)
            elif name == "shapley":
                row[name] = shapley(q, d, tid, max_endo=max_endo)
            else:
                row[name], witnesses[tid] = responsibility(q, d, tid, max_endo=max_endo)
        values[tid] = row
    return ScoreReport(
        query=str(q),
        scores=scores,
        tuple_ids=d.endogenous_ids,
        values=values,
        n_endogenous=d.n_endogenous,
        n_exogenous=len(d.facts) - d.n_endogenous,
        witnesses=witnesses,
    )

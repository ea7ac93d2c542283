"""Possible worlds, tuple-independent and explicit distributions, interventions.

All probabilities are exact ``Fraction`` values.  Worlds are bitmasks over
the endogenous tuples of the underlying instance; exogenous tuples belong
to every world with probability 1.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from fractions import Fraction
from math import prod
from typing import Mapping, Union

import numpy as np

from .engine import check_cap, compile_query
from .errors import DomainError, InstanceFormatError
from .relational import Instance, MonotoneQuery, World, evaluate

HALF = Fraction(1, 2)
_INT64_SAFE = 1 << 62


class Direction(enum.Enum):
    IN = "in"
    OUT = "out"


@dataclass(frozen=True)
class Tid:
    """Tuple-independent distribution: one probability per endogenous tuple."""

    instance: Instance
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.probs) != self.instance.n_endogenous:
            raise DomainError("one probability per endogenous tuple is required")
        for p in self.probs:
            if not 0 <= p <= 1:
                raise DomainError(f"probability {p} outside [0,1]")

    def prob_of(self, tuple_id: str) -> Fraction:
        return self.probs[self.instance.bit(tuple_id)]

    def to_explicit(self, max_endo: int | None = None) -> "Explicit":
        """Materialise every world with nonzero probability."""
        check_cap(self.instance, max_endo)
        worlds = {}
        for w in range(1 << self.instance.n_endogenous):
            p = world_probability(self, w)
            if p:
                worlds[w] = p
        return Explicit(self.instance, tuple(sorted(worlds.items())))


@dataclass(frozen=True)
class Explicit:
    """Finite map from worlds to probabilities; unlisted worlds have probability 0."""

    instance: Instance
    worlds: tuple[tuple[World, Fraction], ...]

    def __post_init__(self):
        total = Fraction(0)
        seen = set()
        limit = self.instance.full_world
        for w, p in self.worlds:
            if w in seen:
                raise DomainError(f"world {w} listed twice")
            if w & ~limit:
                raise DomainError(f"world {w} mentions unknown tuples")
            if p < 0:
                raise DomainError(f"negative probability {p}")
            seen.add(w)
            total += p
        if total != 1:
            raise DomainError(f"world probabilities sum to {total}, not 1")

    def as_dict(self) -> dict[World, Fraction]:
        return dict(self.worlds)


PdbDistribution = Union[Tid, Explicit]


def uniform_half_tid(d: Instance) -> Tid:
    return Tid(d, (HALF,) * d.n_endogenous)


def tid_from_instance(d: Instance) -> Tid:
    """TID from the instance's ``p`` fields; endogenous tuples without one get 1/2."""
    return Tid(d, tuple(HALF if d.fact(t).prob is None else d.fact(t).prob for t in d.endogenous_ids))


def load_explicit(document: str | bytes | Mapping, d: Instance) -> Explicit:
    """Explicit distribution from ``{"worlds":[{"tuples":[...],"p":"0.2"}]}``.

    Exogenous ids may be listed in a world; they are implied anyway.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"invalid JSON: {exc}") from None
    try:
        entries = document["worlds"]
    except (KeyError, TypeError):
        raise InstanceFormatError("document needs a 'worlds' list") from None
    worlds = []
    for entry in entries:
        endo = [t for t in entry["tuples"] if d.fact(t).endogenous]
        try:
            p = Fraction(str(entry["p"]))
        except (ValueError, ZeroDivisionError):
            raise InstanceFormatError(f"unreadable probability {entry['p']!r}") from None
        worlds.append((d.world(endo), p))
    return Explicit(d, tuple(sorted(worlds)))


def world_probability(dist: PdbDistribution, w: World) -> Fraction:
    if isinstance(dist, Explicit):
        return dist.as_dict().get(w, Fraction(0))
    result = Fraction(1)
    for i, p in enumerate(dist.probs):
        result *= p if w >> i & 1 else 1 - p
    return result


def tuple_marginal(dist: PdbDistribution, tuple_id: str) -> Fraction:
    fact = dist.instance.fact(tuple_id)
    if not fact.endogenous:
        return Fraction(1)
    bit = dist.instance.bit(tuple_id)
    if isinstance(dist, Tid):
        return dist.probs[bit]
    return sum((p for w, p in dist.worlds if w >> bit & 1), Fraction(0))


def weighted_sum(table: np.ndarray, probs: tuple[Fraction, ...]) -> Fraction:
    """Exact sum of ``Π p_i^{w_i} (1-p_i)^{1-w_i}`` over worlds marked in ``table``.

    Works on integer numerators over the common denominator.  The lowest
    bits are folded with an int64 matrix-vector product over row chunks,
    the remaining bits one at a time (in Python integers if int64 could
    overflow).
    """
    n = len(probs)
    dens = [p.denominator for p in probs]
    nums = [p.numerator for p in probs]
    total_den = prod(dens)

    low = 0
    low_den = 1
    while low < min(n, 16) and low_den * dens[low] < _INT64_SAFE:
        low_den *= dens[low]
        low += 1
    weights = np.ones(1, dtype=np.int64)
    for i in range(low):
        weights = np.concatenate([weights * (dens[i] - nums[i]), weights * nums[i]])

    rows = table.reshape(-1, 1 << low)
    chunk = max(1, (1 << 20) >> low)
    folded = np.empty(rows.shape[0], dtype=np.int64)
    for start in range(0, rows.shape[0], chunk):
        block = rows[start : start + chunk]
        folded[start : start + len(block)] = block.astype(np.int64) @ weights

    if total_den >= _INT64_SAFE:
        folded = folded.astype(object)
    for i in range(low, n):
        folded = folded[0::2] * (dens[i] - nums[i]) + folded[1::2] * nums[i]
    return Fraction(int(folded[0]), total_den)


def query_probability(
    dist: PdbDistribution, q: MonotoneQuery, max_endo: int | None = None
) -> Fraction:
    """Probability that ``q`` holds in a world drawn from ``dist``."""
    if isinstance(dist, Explicit):
        return sum(
            (p for w, p in dist.worlds if p and evaluate(q, dist.instance, w)), Fraction(0)
        )
    compiled = compile_query(q, dist.instance, max_endo)
    return weighted_sum(compiled.table, dist.probs)


def intervene(dist: PdbDistribution, tuple_id: str, direction: Direction | str) -> PdbDistribution:
    """Distribution after forcing ``tuple_id`` in or out of every world.

    For a TID the result is again a TID with that tuple's probability set to
    1 or 0; tuple independence makes this the same distribution as the
    pushed-forward one.  Call ``to_explicit`` for the world listing.
    """
    direction = Direction(direction)
    fact = dist.instance.fact(tuple_id)
    if not fact.endogenous:
        raise DomainError(f"cannot intervene on exogenous tuple {tuple_id}")
    bit = dist.instance.bit(tuple_id)
    if isinstance(dist, Tid):
        probs = list(dist.probs)
        probs[bit] = Fraction(1 if direction is Direction.IN else 0)
        return Tid(dist.instance, tuple(probs))
    pushed: dict[World, Fraction] = {}
    for w, p in dist.worlds:
        target = w | 1 << bit if direction is Direction.IN else w & ~(1 << bit)
        pushed[target] = pushed.get(target, Fraction(0)) + p
    return Explicit(dist.instance, tuple(sorted(pushed.items())))

"""Closed-form responsibility and causal-effect scores for two query shapes.

Both shapes split an instance into blocks by the constant in the first
column of every tuple.  Inside a block the scores have simple formulas;
across blocks they compose through the resilience and the satisfaction
probability of the other blocks.  Instances must be fully endogenous and
free of dummy tuples.

* ``R(x,y), S(x,z)``: block ``i`` has ``r_i`` R-tuples and ``s_i``
  S-tuples, is satisfied with probability ``(1-2^-r_i)(1-2^-s_i)`` and
  is falsified by deleting ``min(r_i, s_i)`` tuples.
* ``R(x,y), S1(x), ..., Sm(x)``: block ``i`` has ``r_i`` R-tuples and one
  tuple per ``Sj``; it is satisfied with probability ``(1-2^-r_i) 2^-m``
  and falsified by deleting a single S-tuple.
"""

from __future__ import annotations

from fractions import Fraction
from math import prod

from .errors import DomainError
from .relational import Instance
from .scores import ScoreReport


def _check_endogenous(d: Instance) -> None:
    if d.exogenous_ids:
        raise DomainError("analytic oracle requires an instance without exogenous tuples")


def _expect_schema(d: Instance, expected: dict[str, set[int]]) -> None:
    names = set(d.schema.names())
    if names != set(expected):
        raise DomainError(
            f"schema mismatch: expected relations {sorted(expected)}, got {sorted(names)}"
        )
    for name, allowed in expected.items():
        if d.schema.arity(name) not in allowed:
            raise DomainError(f"relation {name} has unexpected arity {d.schema.arity(name)}")


def _report(d: Instance, label: str, rho: dict, ce: dict) -> ScoreReport:
    values = {t: {"ces": ce[t], "resp": rho[t]} for t in d.endogenous_ids}
    return ScoreReport(label, ("ces", "resp"), d.endogenous_ids, values, d.n_endogenous, 0, {})


def _half_pow(k: int) -> Fraction:
    return Fraction(1, 1 << k)


def analytic_oracle_qrs(d: Instance, r_name: str = "R", s_name: str = "S") -> ScoreReport:
    """Scores for ``R(x,y), S(x,z)`` (S may also be unary, ``S(x)``)."""
    _check_endogenous(d)
    _expect_schema(d, {r_name: {2}, s_name: {1, 2}})
    r_count: dict[str, int] = {}
    s_count: dict[str, int] = {}
    for f in d.facts_of(r_name):
        r_count[f.values[0]] = r_count.get(f.values[0], 0) + 1
    for f in d.facts_of(s_name):
        s_count[f.values[0]] = s_count.get(f.values[0], 0) + 1
    if set(r_count) != set(s_count):
        raise DomainError("instance has dummy tuples (a block lacks R or S tuples)")
    blocks = list(r_count)
    sat = {c: (1 - _half_pow(r_count[c])) * (1 - _half_pow(s_count[c])) for c in blocks}
    cut = {c: min(r_count[c], s_count[c]) for c in blocks}

    def others(c, table):
        return [table[o] for o in blocks if o != c]

    rho: dict[str, Fraction] = {}
    ce: dict[str, Fraction] = {}
    for f in d.facts:
        c = f.values[0]
        own, other = (r_count[c], s_count[c]) if f.relation == r_name else (s_count[c], r_count[c])
        rho[f.id] = Fraction(1, own + sum(others(c, cut)))
        miss = prod(1 - p for p in others(c, sat))
        ce[f.id] = _half_pow(own - 1) * (1 - _half_pow(other)) * miss
    return _report(d, f"{r_name}(x,y), {s_name}(x,z)", rho, ce)


def analytic_oracle_qr1sm(
    d: Instance, m: int, r_name: str = "R", s_names: tuple[str, ...] | None = None
) -> ScoreReport:
    """Scores for ``R(x,y), S1(x), ..., Sm(x)``; ``m == 1`` uses the
    two-atom formulas."""
    s_names = tuple(s_names or (f"S{j}" for j in range(1, m + 1)))
    if len(s_names) != m or m < 1:
        raise DomainError("need exactly m >= 1 unary relation names")
    if m == 1:
        return analytic_oracle_qrs(d, r_name, s_names[0])
    _check_endogenous(d)
    _expect_schema(d, {r_name: {2}, **{s: {1} for s in s_names}})
    r_count: dict[str, int] = {}
    for f in d.facts_of(r_name):
        r_count[f.values[0]] = r_count.get(f.values[0], 0) + 1
    for s in s_names:
        if {f.values[0] for f in d.facts_of(s)} != set(r_count):
            raise DomainError("instance has dummy tuples (blocks must hold R and every S)")
    blocks = list(r_count)
    sat = {c: (1 - _half_pow(r_count[c])) * _half_pow(m) for c in blocks}
    rest = len(blocks) - 1

    rho: dict[str, Fraction] = {}
    ce: dict[str, Fraction] = {}
    for f in d.facts:
        c = f.values[0]
        r = r_count[c]
        miss = prod(1 - sat[o] for o in blocks if o != c)
        if f.relation == r_name:
            rho[f.id] = Fraction(1, r + rest)
            ce[f.id] = _half_pow(r + m - 1) * miss
        else:
            rho[f.id] = Fraction(1, 1 + rest)
            ce[f.id] = (1 - _half_pow(r)) * _half_pow(m - 1) * miss
    label = ", ".join([f"{r_name}(x,y)"] + [f"{s}(x)" for s in s_names])
    return _report(d, label, rho, ce)

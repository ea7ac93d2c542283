"""Command-line interface.

Exit codes: 0 success, 1 domain error (caps, failed preconditions, oracle
mismatch), 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .alignment import Mode, build_counterexample, check_alignment, search_violations
from .engine import DEFAULT_MAX_ENDO
from .errors import DomainError, QuerySyntaxError, VerificationError
from .oracles import analytic_oracle_qr1sm, analytic_oracle_qrs
from .pdb import (
    Direction,
    intervene,
    load_explicit,
    query_probability,
    tid_from_instance,
    tuple_marginal,
)
from .relational import (
    dump_instance,
    eliminate_constants,
    load_instance,
    parse_query,
    parse_reachability,
    strip_constants,
)
from .scores import SCORE_NAMES, score_table
from .structure import classify, reduce


class UsageError(Exception):
    pass


def fmt(value: Fraction) -> str:
    return f"{value} ({float(value):.6f})"


def exact(value: Fraction) -> dict:
    return {"exact": str(value), "approx": f"{float(value):.6f}"}


def render(headers: list[str], rows: list[list], fmt_name: str, payload=None) -> str:
    """Render rows as an aligned table, CSV, or (with ``payload``) JSON."""
    if fmt_name == "json":
        return json.dumps(payload, indent=2)
    cells = [[fmt(c) if isinstance(c, Fraction) else str(c) for c in row] for row in rows]
    if fmt_name == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(headers)
        for row in rows:
            writer.writerow([str(c) for c in row])
        return buf.getvalue().rstrip("\n")
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines)


def _query(args):
    if getattr(args, "reach", None):
        if args.query:
            raise UsageError("give either -q or --reach, not both")
        return parse_reachability(args.reach)
    if not args.query:
        raise UsageError("a query is required (-q or --reach)")
    return parse_query(args.query)


def _instance(args):
    try:
        return load_instance(Path(args.instance).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read instance: {exc}") from None


def _scores(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in names if s not in SCORE_NAMES]
    if bad or not names:
        raise UsageError(f"unknown scores {bad}; choose from {', '.join(SCORE_NAMES)}")
    return names


def cmd_score(args) -> str:
    q, d = _query(args), _instance(args)
    names = _scores(args.scores)
    report = score_table(q, d, names, max_endo=args.max_endo)
    lines = []
    if args.oracle:
        if args.oracle == "qrs":
            oracle = analytic_oracle_qrs(d)
        else:
            unary = [n for n in d.schema.names() if d.schema.arity(n) == 1]
            oracle = analytic_oracle_qr1sm(d, len(unary), s_names=tuple(unary))
        full = score_table(q, d, ("ces", "resp"), max_endo=args.max_endo)
        for tid in d.endogenous_ids:
            for name in ("ces", "resp"):
                if oracle[tid][name] != full[tid][name]:
                    raise DomainError(
                        f"oracle mismatch on {tid} {name}: "
                        f"{oracle[tid][name]} vs {full[tid][name]}"
                    )
        lines.append(f"oracle {args.oracle}: agrees with enumeration")
    rows = [[tid, str(d.fact(tid))] + [report[tid][n] for n in names] for tid in report.tuple_ids]
    payload = {
        "query": report.query,
        "n_endogenous": report.n_endogenous,
        "n_exogenous": report.n_exogenous,
        "scores": {tid: {n: exact(report[tid][n]) for n in names} for tid in report.tuple_ids},
    }
    if args.oracle:
        payload["oracle"] = args.oracle
    body = render(["id", "tuple", *names], rows, args.format, payload)
    if args.format == "json":
        return body
    return "\n".join(lines + [body]) if args.format == "table" else body


def _verdict_payload(v) -> dict:
    out = {"scores": list(v.scores), "aligned": v.aligned}
    if v.witness:
        w = v.witness
        out["witness"] = {
            "pair": [w.first, w.second],
            w.first: [exact(x) for x in w.first_values],
            w.second: [exact(x) for x in w.second_values],
        }
    return out


def _verdict_text(v) -> str:
    s1, s2 = v.scores
    if v.aligned:
        return f"{s1} vs {s2}: aligned"
    w = v.witness
    return (
        f"{s1} vs {s2}: not aligned\n"
        f"witness {w.first}: {s1}={fmt(w.first_values[0])} {s2}={fmt(w.first_values[1])}\n"
        f"witness {w.second}: {s1}={fmt(w.second_values[0])} {s2}={fmt(w.second_values[1])}"
    )


def cmd_align(args) -> str:
    try:
        sc1, sc2 = args.pair.split(":")
    except ValueError:
        raise UsageError("--pair must look like ces:resp") from None
    _scores(f"{sc1},{sc2}")
    q = _query(args)
    if args.search:
        if args.instance:
            raise UsageError("--search generates instances; do not pass -i")
        result = search_violations(
            q, sc1, sc2, trials=args.trials, seed=args.seed, stop_at_first=False
        )
        payload = {
            "seed": result.seed,
            "trials": result.trials,
            "violations": len(result.violations),
            "first": None,
        }
        text = [f"seed {result.seed}, {result.trials} instances, {len(result.violations)} violations"]
        if result.violations:
            trial, inst, verdict = result.violations[0]
            payload["first"] = {"trial": trial, "verdict": _verdict_payload(verdict)}
            text.append(f"first violation at instance {trial}:")
            text += [f"  {f.id} {f}{'' if f.endogenous else ' [exo]'}" for f in inst.facts]
            text.append(_verdict_text(verdict))
        return json.dumps(payload, indent=2) if args.format == "json" else "\n".join(text)
    if not args.instance:
        raise UsageError("-i is required unless --search is given")
    d = _instance(args)
    verdict = check_alignment(q, d, sc1, sc2, max_endo=args.max_endo)
    if args.format == "json":
        return json.dumps(_verdict_payload(verdict), indent=2)
    if args.format == "csv":
        w = verdict.witness
        rows = [[sc1, sc2, verdict.aligned, w.first if w else "", w.second if w else ""]]
        return render(["score1", "score2", "aligned", "first", "second"], rows, "csv")
    return _verdict_text(verdict)


def cmd_classify(args) -> str:
    q = strip_constants(parse_query(args.query))
    c = classify(q)
    payload = {
        "query": str(q),
        "components": [str(comp.subquery) for comp in c.structure.components],
        "coincidences": [list(cell) for cell in c.structure.coincidences],
        "reduced": str(c.reduced),
        "with_exogenous": {
            "status": c.with_exogenous.status.value,
            "reason": c.with_exogenous.reason.name if c.with_exogenous.reason else None,
        },
        "without_exogenous": {
            "status": c.without_exogenous.status.value,
            "reason": c.without_exogenous.reason.name if c.without_exogenous.reason else None,
        },
    }
    if args.format == "json":
        return json.dumps(payload, indent=2)

    def line(v):
        return v.status.value + (f" ({v.reason.name}: {v.reason.value})" if v.reason else "")

    rows = [
        ["query", payload["query"]],
        ["components", " | ".join(payload["components"])],
        ["coincidences", " ".join("{" + ",".join(cell) + "}" for cell in payload["coincidences"])],
        ["reduced", payload["reduced"]],
        ["with exogenous", line(c.with_exogenous)],
        ["without exogenous", line(c.without_exogenous)],
    ]
    if args.format == "csv":
        return render(["field", "value"], rows, "csv")
    return "\n".join(f"{k:<18} {v}" for k, v in rows)


def cmd_counterexample(args) -> str:
    q = strip_constants(parse_query(args.query))
    mode = None if args.mode == "auto" else Mode(args.mode)
    ce = build_counterexample(q, mode)
    document = dump_instance(ce.instance, ce.provenance())
    if args.output:
        Path(args.output).write_text(document + "\n")
    if args.format == "json":
        return document
    rows = [[f.id, str(f), "endogenous" if f.endogenous else "exogenous"] for f in ce.instance.facts]
    text = [f"mode: {ce.mode.value}", *[f"note: {n}" for n in ce.lifting.notes]]
    text.append(render(["id", "tuple", "kind"], rows, "table" if args.format == "table" else "csv"))
    text.append(_verdict_text(ce.verdict))
    text += [_verdict_text(v) for v in ce.extra_verdicts]
    return "\n".join(text)


def cmd_prob(args) -> str:
    d = _instance(args)
    if args.worlds:
        try:
            dist = load_explicit(Path(args.worlds).read_text(), d)
        except OSError as exc:
            raise UsageError(f"cannot read worlds file: {exc}") from None
    else:
        dist = tid_from_instance(d)
    label = "original"
    if args.do:
        try:
            direction, tid = args.do.split(":", 1)
            direction = Direction(direction)
        except ValueError:
            raise UsageError("--do must look like in:<id> or out:<id>") from None
        dist = intervene(dist, tid, direction)
        label = f"do({tid} {direction.value})"
    rows = [[f.id, str(f), tuple_marginal(dist, f.id)] for f in d.facts]
    payload: dict = {
        "distribution": label,
        "marginals": {f.id: exact(tuple_marginal(dist, f.id)) for f in d.facts},
    }
    header = [f"distribution: {label}"]
    if args.query or args.reach:
        q = _query(args)
        p = query_probability(dist, q, args.max_endo)
        payload["query"] = str(q)
        payload["probability"] = exact(p)
        header.append(f"P({q}) = {fmt(p)}")
    if args.format == "json":
        return json.dumps(payload, indent=2)
    body = render(["id", "tuple", "marginal"], rows, args.format)
    return body if args.format == "csv" else "\n".join(header + [body])


def cmd_reduce(args) -> str:
    q, d = parse_query(args.query), _instance(args)
    q, d, _ = eliminate_constants(q, d)
    result = reduce(q, d)
    if args.format == "json":
        doc = json.loads(dump_instance(result.instance))
        doc["query"] = str(result.query)
        return json.dumps(doc, indent=2)
    rows = [
        [f.id, str(d.fact(f.id)), str(f), "endogenous" if f.endogenous else "exogenous"]
        for f in result.instance.facts
    ]
    body = render(["id", "original", "reduced", "kind"], rows, args.format)
    return body if args.format == "csv" else f"reduced query: {result.query}\n{body}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scorealign", description="Exact attribution scores and alignment analysis."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instance=True, reach=True):
        if instance:
            p.add_argument("-i", "--instance", help="instance JSON file")
        p.add_argument("-q", "--query", help="conjunctive query, e.g. \"R(x,y), S(x)\"")
        if reach:
            p.add_argument("--reach", help="reachability query REL,source,target")
        p.add_argument("--format", choices=("table", "json", "csv"), default="table")
        p.add_argument(
            "--max-endo",
            type=int,
            default=DEFAULT_MAX_ENDO,
            help=f"enumeration limit on endogenous tuples (default {DEFAULT_MAX_ENDO})",
        )

    p = sub.add_parser("score", help="score every endogenous tuple")
    common(p)
    p.add_argument("--scores", default=",".join(SCORE_NAMES))
    p.add_argument("--oracle", choices=("qrs", "qr1sm"), help="cross-check closed forms")
    p.set_defaults(run=cmd_score, needs_instance=True)

    p = sub.add_parser("align", help="compare the rankings of two scores")
    common(p)
    p.add_argument("--pair", default="ces:resp")
    p.add_argument("--search", action="store_true", help="search random instances instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=500)
    p.set_defaults(run=cmd_align, needs_instance=False)

    p = sub.add_parser("classify", help="structural alignment classification")
    common(p, instance=False, reach=False)
    p.set_defaults(run=cmd_classify, needs_instance=False, needs_query_text=True)

    p = sub.add_parser("counterexample", help="build a non-aligned instance")
    common(p, instance=False, reach=False)
    p.add_argument("--mode", choices=("auto", "single", "multi", "shapley"), default="auto")
    p.add_argument("-o", "--output", help="also write the instance JSON here")
    p.set_defaults(run=cmd_counterexample, needs_instance=False, needs_query_text=True)

    p = sub.add_parser("prob", help="tuple marginals and query probability")
    common(p)
    p.add_argument("-w", "--worlds", help="explicit distribution JSON file")
    p.add_argument("--do", help="intervention in:<id> or out:<id>")
    p.set_defaults(run=cmd_prob, needs_instance=True)

    p = sub.add_parser("reduce", help="reduced query and instance")
    common(p, reach=False)
    p.set_defaults(run=cmd_reduce, needs_instance=True, needs_query_text=True)
    return parser


def execute(argv: Sequence[str]) -> tuple[int, str, str]:
    """Run one command; returns (exit code, stdout text, stderr text)."""
    parser = build_parser()
    err = io.StringIO()
    try:
        with contextlib.redirect_stderr(err):
            args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0), "", err.getvalue()
    try:
        if args.needs_instance and not args.instance:
            raise UsageError("-i/--instance is required")
        if getattr(args, "needs_query_text", False) and not args.query:
            raise UsageError("-q/--query is required")
        out = args.run(args)
    except (UsageError, QuerySyntaxError) as exc:
        return 2, "", f"usage error: {exc}\n"
    except (DomainError, VerificationError) as exc:
        return 1, "", f"error: {exc}\n"
    return 0, out + "\n", ""


def main(argv: Sequence[str] | None = None) -> None:
    code, out, err = execute(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    sys.exit(code)


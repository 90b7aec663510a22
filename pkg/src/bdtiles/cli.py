"""Command-line interface: ``bdtiles <command> ...``.

Exit codes: 0 ok, 1 usage, 2 invalid rule, 3 critical classification,
4 budget exceeded, 5 internal invariant breach.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import report as reports
from .bdanalysis import MatchingInstance, bd_matching_feasible, divergence_table, min_displacement, min_displacement_squared
from .construction import NestedFamily, OmegaTiling
from .errors import BDTilesError, BudgetExceeded, CriticalClassificationError, RuleValidationError, UsageError
from .geometry import Box
from .rulefile import format_rational, load_rule, named_pair
from .spectral import CRITICAL, count_vector, rule_report, substitution_matrix
from .substitution import DEFAULT_BUDGET, expand_window, validate_rule
from .svg import render_svg
from .validation import check_word


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _window(text: str) -> Box:
    parts = text.split(",")
    if len(parts) % 2 or not parts:
        raise UsageError(f"window needs lo and hi coordinates, got {text!r}")
    try:
        coords = [Fraction(p.strip()) for p in parts]
    except ValueError as exc:
        raise UsageError(f"bad window coordinate in {text!r}") from exc
    d = len(coords) // 2
    lo, hi = coords[:d], coords[d:]
    if any(h < l for l, h in zip(lo, hi)):
        raise UsageError("window upper corner lies below its lower corner")
    return Box.from_bounds(lo, hi)


def _word(text: str) -> str:
    try:
        return check_word(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _census(rule, patch) -> str:
    counts = patch.count_vector(rule.n)
    lines = [f"{p.label}\t{c}" for p, c in zip(rule.prototiles, counts)]
    lines.append(f"total\t{sum(counts)}")
    return "\n".join(lines) + "\n"


def _family(args, rule):
    p_name, q_name = named_pair(rule, args.p, args.q)
    p, q = rule.named_patches[p_name], rule.named_patches[q_name]
    rep = rule_report(rule, p.count_vector(rule.n), q.count_vector(rule.n))
    if rep.classification == CRITICAL:
        raise CriticalClassificationError("|lambda_t| equals lambda1^((d-1)/d); the construction does not apply")
    return NestedFamily(rule, p, q, rep, args.budget)


def cmd_validate(args) -> int:
    rule = load_rule(args.rule, validate=False)
    rep = validate_rule(rule)
    if rep.ok:
        print("ok")
        return 0
    for v in rep.violations:
        print(f"{v.kind}: {v.message}", file=sys.stderr)
    return 2


def cmd_analyze(args) -> int:
    rule = load_rule(args.rule)
    try:
        p_name, q_name = named_pair(rule, args.p, args.q)
    except BDTilesError:
        if args.p or args.q:
            raise
        p_name = q_name = None
    doc = reports.analysis_report(rule, p_name, q_name, _word(args.omega), _word(args.eta), args.mmax,
                                  args.budget, args.threads)
    _write(args.json, reports.dumps(doc))
    if doc["spectral"]["classification"] == CRITICAL:
        print("classification is critical: the dichotomy is undecided", file=sys.stderr)
        return CriticalClassificationError.exit_code
    return 0


def cmd_expand(args) -> int:
    rule = load_rule(args.rule)
    try:
        seed = rule.tile(rule.index(args.seed))
    except KeyError as exc:
        raise UsageError(f"unknown prototile {args.seed!r}") from exc
    query = _window(args.window) if args.window else None
    if query is None:
        unit = tuple(int(i == seed.prototile_id) for i in range(rule.n))
        total = sum(count_vector(substitution_matrix(rule), unit, args.k))
        if total > args.budget:
            raise BudgetExceeded(f"rho^{args.k}({args.seed}) has {total} tiles; pass --window or raise --budget")
    patch = expand_window(rule, seed, args.k, query, args.threads)
    sys.stdout.write(_census(rule, patch))
    if args.svg:
        _write(args.svg, render_svg(patch, labels=[p.label for p in rule.prototiles], origin=True))
    return 0


def cmd_counts(args) -> int:
    rule = load_rule(args.rule)
    p_name, q_name = named_pair(rule, args.p, args.q)
    m = substitution_matrix(rule)
    pv = rule.named_patches[p_name].count_vector(rule.n)
    qv = rule.named_patches[q_name].count_vector(rule.n)
    lines = [f"k\t#{p_name}\t#{q_name}\tdifference"]
    for k in range(args.kmax + 1):
        a, b = sum(count_vector(m, pv, k)), sum(count_vector(m, qv, k))
        lines.append(f"{k}\t{a}\t{b}\t{abs(a - b)}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_omega(args) -> int:
    rule = load_rule(args.rule)
    family = _family(args, rule)
    tiling = OmegaTiling(family, _word(args.word))
    query = _window(args.window)
    level = tiling.level_for(query)
    patch = tiling.window(query)
    sys.stdout.write(f"level\t{level}\nk\t{family.k(level)}\n")
    sys.stdout.write(_census(rule, patch))
    if args.svg:
        chain = tiling.nested(level).chain
        outlines = [link.support for link in chain if link.support.meets(query)]
        _write(args.svg, render_svg(patch, labels=[p.label for p in rule.prototiles], origin=True,
                                    outlines=outlines))
    return 0


def cmd_bdtable(args) -> int:
    rule = load_rule(args.rule)
    family = _family(args, rule)
    rows = divergence_table(family, _word(args.omega), _word(args.eta), args.mmax, args.budget, args.threads)
    doc = {"omega": args.omega.upper(), "eta": args.eta.upper(), "rows": [reports.row_document(r) for r in rows]}
    _write(args.json, reports.dumps(doc))
    return 0


def _load_points(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise UsageError(f"{path}: expected a JSON array of points")
    try:
        return [tuple(Fraction(str(c)) for c in pt) for pt in data]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{path}: points must be arrays of numbers or 'p/q' strings") from exc


def cmd_match(args) -> int:
    left, right = _load_points(args.left), _load_points(args.right)
    if args.cap is not None:
        res = bd_matching_feasible(MatchingInstance(left, right, Fraction(args.cap), args.norm))
        doc = {"feasible": res.feasible, "cap": format_rational(Fraction(args.cap))}
        if res.feasible:
            doc["matching"] = list(res.matching)
        else:
            cert = res.certificate
            doc["certificate"] = {"side": cert.side, "subset": list(cert.subset),
                                  "neighbours": list(cert.neighbours), "reason": res.reason}
    else:
        if len(left) != len(right) or not left:
            raise UsageError("min displacement needs two nonempty point sets of equal size")
        key = min_displacement_squared(left, right, args.norm)
        value = min_displacement(left, right, args.norm)
        doc = {
            "min_displacement": format_rational(value) if isinstance(value, Fraction) else reports.decimal(value),
            "squared" if args.norm == "euclidean" else "exact": format_rational(key),
        }
    sys.stdout.write(reports.dumps(doc))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bdtiles", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=1, help="worker threads for expansions")
    parser.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="maximum tiles per expansion")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", help="check that the children tile each inflated prototile")
    p.add_argument("rule")
    p.set_defaults(func=cmd_validate)

    def pair(sp):
        sp.add_argument("--p", help="named patch used as P")
        sp.add_argument("--q", help="named patch used as Q")

    p = sub.add_parser("analyze", help="spectral data, constants and divergence rows")
    p.add_argument("rule")
    pair(p)
    p.add_argument("--json", help="write the report here instead of stdout")
    p.add_argument("--omega", default="PPPPPP")
    p.add_argument("--eta", default="QQQQQQ")
    p.add_argument("--mmax", type=int, default=2)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("expand", help="tiles of rho^k(seed) inside a window")
    p.add_argument("rule")
    p.add_argument("--seed", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--window", help="x0,y0,x1,y1")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("counts", help="tile counts of rho^k(P), rho^k(Q) and their difference")
    p.add_argument("rule")
    pair(p)
    p.add_argument("--kmax", type=int, required=True)
    p.set_defaults(func=cmd_counts)

    p = sub.add_parser("omega", help="window of the tiling built from a word over P, Q")
    p.add_argument("rule")
    pair(p)
    p.add_argument("--word", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--svg")
    p.set_defaults(func=cmd_omega)

    p = sub.add_parser("bdtable", help="divergence table for two words")
    p.add_argument("rule")
    pair(p)
    p.add_argument("--omega", required=True)
    p.add_argument("--eta", required=True)
    p.add_argument("--mmax", type=int, required=True)
    p.add_argument("--json")
    p.set_defaults(func=cmd_bdtable)

    p = sub.add_parser("match", help="bounded-displacement matching between two point sets")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--cap", help="displacement bound; omit to compute the minimum")
    p.add_argument("--norm", choices=("euclidean", "max"), default="euclidean")
    p.set_defaults(func=cmd_match)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1 or args.budget < 1:
            raise UsageError("--threads and --budget must be positive")
        return args.func(args)
    except RuleValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v.kind}: {v.message}", file=sys.stderr)
        return exc.exit_code
    except BDTilesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return UsageError.exit_code
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())

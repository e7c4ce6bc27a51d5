"""Command-line entry point.  Every subcommand prints one JSON document on stdout.

Exit codes: 0 success, 1 negative verdict, 2 usage error, 3 search budget
exhausted, 4 result contradicting a published claim.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import bounds
from .core import CosetSpec
from .criteria import find_split, necessary_conditions
from .oddsq import decompose_odd_squares, min_odd_squares
from .repsearch import SearchBudget, cosets_isometric, find_representation, min_representation
from .survey import ClaimContradiction, SurveyError, cases_for, run_cases, run_witnesses

OK, NEGATIVE, USAGE, EXHAUSTED, CONTRADICTION = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _load_coset(path: str) -> CosetSpec:
    try:
        text = sys.stdin.read() if path == "-" else open(path).read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}")
    try:
        return CosetSpec.loads(text)
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"bad coset file {path}: {e}")


def _budget(args) -> SearchBudget:
    return SearchBudget(max_nodes=args.max_nodes)


def cmd_oddsq(args):
    m = args.M
    if m < 1:
        raise UsageError("M must be a positive integer")
    r = args.r if args.r is not None else min_odd_squares(m)
    dec = decompose_odd_squares(m, r)
    out = {"M": m, "min_r": min_odd_squares(m), "r": r, "parts": list(dec.parts) if dec else None}
    return out, OK if dec else NEGATIVE


def cmd_check(args):
    coset = _load_coset(args.coset)
    if args.filters_only:
        nec = necessary_conditions(coset)
        out = {"coset": coset.to_json(), "necessary": nec.to_json()}
        if coset.q_w > 8:
            cert = find_split(coset)
            out["split"] = cert.to_json() if cert else None
        else:
            out["split"] = None
            out["split_reason"] = "Q(w) <= 8"
        return out, OK
    if args.r is None:
        raise UsageError("check needs --r or --filters-only")
    res = find_representation(coset, args.r, _budget(args))
    code = {"found": OK, "none": NEGATIVE, "excluded": NEGATIVE, "exhausted": EXHAUSTED}[res.status]
    return {"coset": coset.to_json(), **res.to_json()}, code


def cmd_min_rep(args):
    coset = _load_coset(args.coset)
    r_max = args.r_max or max(1, coset.q_w)
    res = min_representation(coset, r_max, _budget(args))
    out = {"coset": coset.to_json(), "exhausted": res.exhausted, **res.to_json()}
    if res.r is not None:
        return out, OK
    return out, EXHAUSTED if res.exhausted else NEGATIVE


def cmd_survey(args):
    cases = cases_for(args.n, args.case, scaled=args.scaled)
    if not cases:
        raise UsageError(f"no case {args.case!r} for n={args.n}")
    reports = run_cases(cases, scaled=args.scaled, snapshot=args.snapshot,
                        certify=not args.no_certify, threads=args.threads)
    return {"n": args.n, "reports": [r.to_json() for r in reports]}, OK


def cmd_witnesses(args):
    verdicts = run_witnesses(strict=False)
    ok = all(v.ok for v in verdicts)
    return {"witnesses": [v.to_json() for v in verdicts], "ok": ok}, OK if ok else CONTRADICTION


def cmd_bounds(args):
    n, D, eps = args.n, args.D, args.eps
    try:
        bounds.BoundParams(n, D, eps)
    except ValueError as e:
        raise UsageError(str(e))

    def both(fn_log, fn):
        lv = fn_log()
        try:
            return {"value": fn(), "log": lv, "log_space": False}
        except bounds.BoundOverflow:
            return {"value": None, "log": lv, "log_space": True}

    out = {
        "n": n,
        "D": D,
        "eps": eps,
        "sigma": bounds.hermite_sigma(n) if n >= 2 else None,
        "alpha_bar": both(lambda: bounds.log_alpha_bar(n), lambda: bounds.alpha_bar(n)),
        "c_bar": both(lambda: bounds.log_c_bar(n, D), lambda: bounds.c_bar(n, D)),
        "G": both(lambda: bounds.log_G(n, D), lambda: bounds.G(n, D)),
        "chain": [s.to_json() for s in bounds.upper_bound_chain(n, D)] if n >= 3 else None,
        "envelope_log_ratio": bounds.envelope_log_ratio(n, D, eps),
    }
    return out, OK


def cmd_isometric(args):
    a, b = _load_coset(args.a), _load_coset(args.b)
    iso = cosets_isometric(a, b)
    return {"a": a.to_json(), "b": b.to_json(), "isometric": iso}, OK if iso else NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="JSON output (the default)")
    common.add_argument("--quiet", action="store_true", help="print nothing; exit code only")
    common.add_argument("--max-nodes", type=_positive, default=None, help="search node budget")
    common.add_argument("--threads", type=_positive, default=os.cpu_count() or 1,
                        help="worker processes for surveys")

    p = argparse.ArgumentParser(prog="oddwaring", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("oddsq", parents=[common], help="write M as a sum of odd squares")
    s.add_argument("M", type=int)
    s.add_argument("--r", type=_positive)
    s.set_defaults(fn=cmd_oddsq)

    s = sub.add_parser("min-rep", parents=[common], help="smallest r with K + w/2 -> Sigma_r")
    s.add_argument("--coset", required=True, help="coset JSON file, or - for stdin")
    s.add_argument("--r-max", type=_positive)
    s.set_defaults(fn=cmd_min_rep)

    s = sub.add_parser("check", parents=[common], help="decide K + w/2 -> Sigma_r")
    s.add_argument("--coset", required=True)
    s.add_argument("--r", type=_positive)
    s.add_argument("--filters-only", action="store_true")
    s.set_defaults(fn=cmd_check)

    s = sub.add_parser("survey", parents=[common], help="run the rank 2-4 case analysis")
    s.add_argument("--n", type=int, required=True, choices=(2, 3, 4))
    s.add_argument("--case", default=None, help="case label such as 3-i")
    s.add_argument("--scaled", action="store_true", help="reduced diagonal bounds")
    s.add_argument("--snapshot", default=None, help="JSON-lines progress file")
    s.add_argument("--no-certify", action="store_true", help="skip certifying survivors")
    s.set_defaults(fn=cmd_survey)

    s = sub.add_parser("witnesses", parents=[common], help="verify the lower-bound witnesses")
    s.set_defaults(fn=cmd_witnesses)

    s = sub.add_parser("bounds", parents=[common], help="evaluate the growth bounds")
    s.add_argument("--n", type=_positive, required=True)
    s.add_argument("--D", type=float, default=1.0)
    s.add_argument("--eps", type=float, default=1.0)
    s.set_defaults(fn=cmd_bounds)

    s = sub.add_parser("isometric", parents=[common], help="test two cosets for isometry")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.set_defaults(fn=cmd_isometric)
    return p


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        out, code = args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE
    except ClaimContradiction as e:
        print(f"contradiction: {e}", file=sys.stderr)
        return CONTRADICTION
    except SurveyError as e:
        print(f"survey error: {e}", file=sys.stderr)
        return EXHAUSTED
    if not args.quiet:
        print(json.dumps(out))
    return code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

"""Command-line front end: ``afakit {construct,eval,sweep,verify,report-diff}``.

Exit codes: 0 success / PASS, 1 verification FAIL or differing reports,
2 usage, parse or precondition errors.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

import mpmath

from . import constructions as C
from . import fileio
from . import verify as V
from .automata import AutomatonError, ErrorMode, Nfa, Pfa, Qfa, accept_value, nfa_accepting_paths
from .numerics import NumericsError, format_fixed

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

MODE_ALIASES = {
    "two-sided": "two-sided",
    "pos-one-sided": "positive-one-sided",
    "positive-one-sided": "positive-one-sided",
    "neg-one-sided": "negative-one-sided",
    "negative-one-sided": "negative-one-sided",
    "zero": "zero",
}

CONSTRUCT_FAMILIES = ("count", "modp", "mod2k", "end", "modxor", "nfa2afa", "nfa2afa-zero",
                      "pfa2afa", "qfa2afa", "cutpoint", "normalize")
TARGETS = ("count", "modp", "mod2k", "nfa", "nfa-zero", "file")
ORACLES = ("count", "modp", "mod2k", "end", "modxor", "nfa")


class UsageError(Exception):
    pass


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("construction parameters")
    g.add_argument("--m", type=int, help="COUNT_m target length")
    g.add_argument("--p", type=int, help="MOD_p prime")
    g.add_argument("--k", type=int, help="MOD2^k exponent or MODXOR_k block parameter")
    g.add_argument("--n", type=int, help="END_n position")
    g.add_argument("--t", type=str, help="sharpness parameter")
    g.add_argument("--lambda", dest="lam", type=_rational, help="cutpoint")
    g.add_argument("--paths", type=int, default=1, help="accepting paths per member (zero-error NFA)")
    g.add_argument("--family", choices=("end", "modxor"), help="built-in NFA family")
    g.add_argument("--in", dest="infile", help="input automaton file")
    g.add_argument("--prec", type=int, default=None, help="real-regime precision in bits (env AFAKIT_PRECISION)")
    g.add_argument("--real", action="store_true", help="force the real regime for mod2k")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="afakit", description="Affine finite automata toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a construction and write its automaton file")
    p.add_argument("construction", choices=CONSTRUCT_FAMILIES)
    _add_params(p)
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("eval", help="print the acceptance value of an automaton file on a string")
    p.add_argument("file")
    p.add_argument("string", nargs="?", default="")
    p.add_argument("--places", type=int, default=30, help="decimal places for real-regime output")

    for name, helptext in (("sweep", "evaluate every string up to a length and write a report"),
                           ("verify", "certify an error mode over an exhaustive sweep")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("target", choices=TARGETS)
        _add_params(p)
        p.add_argument("--oracle", choices=ORACLES, help="language oracle for the 'file' target")
        p.add_argument("--max-len", type=int, help="longest input string")
        p.add_argument("--promise-bound", type=int, help="largest block count j for mod2k")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--jobs", type=int, default=1)
        if name == "sweep":
            p.add_argument("--out", help="report file (default: stdout)")
        else:
            p.add_argument("--mode", choices=sorted(MODE_ALIASES))
            p.add_argument("--eps", type=str, help="error bound (rational, or decimal in the real regime)")
            p.add_argument("--tol", type=str, default=None, help="tolerance for real-regime machines")
            p.add_argument("--report", help="also write the sweep report here")
            p.add_argument("--batch", action="store_true",
                           help="vectorized exhaustive check without a per-row report (exact, zero or one-sided)")

    p = sub.add_parser("report-diff", help="compare two report files")
    p.add_argument("a")
    p.add_argument("b")
    return ap


# -- helpers -----------------------------------------------------------------

def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required here")


def _int_t(args, default=1) -> int:
    if args.t is None:
        return default
    try:
        return int(args.t)
    except ValueError as exc:
        raise UsageError("--t must be a positive integer for this construction") from exc


def _load(path, kind=None):
    M = fileio.load(path)
    if kind is not None and not isinstance(M, kind):
        raise UsageError(f"{path}: expected a {kind.kind} file, got {M.kind}")
    return M


def _family_nfa(args) -> Nfa:
    if args.infile:
        return C.nfa_normalize(_load(args.infile, Nfa))
    if args.family == "end":
        _need(args, "n")
        return C.end_nfa(args.n)
    if args.family == "modxor":
        _need(args, "k")
        return C.modxor_nfa(args.k)
    raise UsageError("give --in FILE or --family end|modxor")


def construct(args):
    fam = args.construction
    if fam == "count":
        _need(args, "m")
        return C.count_afa(args.m, _int_t(args))
    if fam == "modp":
        _need(args, "p", "t")
        return C.mod_p_afa(args.p, args.t, args.prec)
    if fam == "mod2k":
        _need(args, "k")
        return C.mod2k_afa(args.k, args.prec, exact=False if args.real else None)
    if fam == "end":
        _need(args, "n")
        return C.end_nfa(args.n)
    if fam == "modxor":
        _need(args, "k")
        return C.modxor_nfa(args.k)
    if fam == "nfa2afa":
        return C.nfa_to_afa(_family_nfa(args), _int_t(args))
    if fam == "nfa2afa-zero":
        return C.nfa_to_afa_zero_error(_family_nfa(args), args.paths)
    if fam == "pfa2afa":
        _need(args, "infile")
        return C.pfa_to_afa(_load(args.infile, Pfa))
    if fam == "qfa2afa":
        _need(args, "infile")
        return C.qfa_to_afa(_load(args.infile, Qfa))
    if fam == "cutpoint":
        _need(args, "infile", "lam")
        return C.exclusive_cutpoint_afa(C.CutpointSpec(_load(args.infile, Pfa), args.lam), _int_t(args))
    if fam == "normalize":
        _need(args, "infile")
        return C.nfa_normalize(_load(args.infile, Nfa))
    raise UsageError(fam)


def _oracle_for(name, args, machine):
    if name == "count":
        _need(args, "m")
        return V.count_oracle(args.m)
    if name == "modp":
        _need(args, "p")
        return V.modp_oracle(args.p)
    if name == "mod2k":
        _need(args, "k")
        return V.mod2k_oracle(args.k)
    if name == "end":
        _need(args, "n")
        return V.end_oracle(args.n)
    if name == "modxor":
        _need(args, "k")
        return V.modxor_oracle(args.k)
    if name == "nfa":
        if not isinstance(machine, Nfa):
            raise UsageError("the nfa oracle needs an NFA given with --family or --in")
        return V.nfa_oracle(machine)
    raise UsageError(f"unknown oracle {name!r}")


def plan(args):
    """Resolve a sweep/verify target to (machine, oracle, nfa, default mode, enumeration kwargs)."""
    tgt = args.target
    nfa = None
    enum = {}
    if tgt == "count":
        _need(args, "m")
        t = _int_t(args)
        M = C.count_afa(args.m, t)
        oracle = V.count_oracle(args.m)
        mode = ErrorMode("negative-one-sided", Fraction(1, 2 * t + 1))
        enum["max_len"] = args.max_len if args.max_len is not None else 2 * args.m + 10
    elif tgt == "modp":
        _need(args, "p", "t")
        M = C.mod_p_afa(args.p, args.t, args.prec)
        oracle = V.modp_oracle(args.p)
        with M.regime.workprec():
            bound = mpmath.cot(mpmath.pi / args.p) / M.regime.coerce(args.t)
        mode = ErrorMode("negative-one-sided", bound) if bound < 1 else None
        enum["max_len"] = args.max_len if args.max_len is not None else 5 * args.p
    elif tgt == "mod2k":
        _need(args, "k")
        M = C.mod2k_afa(args.k, args.prec, exact=False if args.real else None)
        oracle = V.mod2k_oracle(args.k)
        mode = ErrorMode("zero")
        enum["promise_bound"] = args.promise_bound if args.promise_bound is not None else 16
    elif tgt in ("nfa", "nfa-zero"):
        nfa = _family_nfa(args)
        if args.infile:
            oracle = V.nfa_oracle(nfa)
        else:
            oracle = V.end_oracle(args.n) if args.family == "end" else V.modxor_oracle(args.k)
        if tgt == "nfa":
            t = _int_t(args)
            M = C.nfa_to_afa(nfa, t)
            mode = ErrorMode("positive-one-sided", Fraction(1, 2 * t + 1))
        else:
            M = C.nfa_to_afa_zero_error(nfa, args.paths)
            mode = ErrorMode("zero")
        _need(args, "max_len")
        enum["max_len"] = args.max_len
    else:
        _need(args, "infile", "oracle")
        M = fileio.load(args.infile)
        if isinstance(M, Nfa):
            M = C.nfa_normalize(M)
            nfa = M
        oracle = _oracle_for(args.oracle, args, M)
        mode = None
        if args.oracle == "mod2k" and args.max_len is None:
            enum["promise_bound"] = args.promise_bound if args.promise_bound is not None else 16
        else:
            _need(args, "max_len")
            enum["max_len"] = args.max_len
    return M, oracle, nfa, mode, enum


def _write(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report_text(report, fmt, path):
    if fmt is None:
        fmt = "json" if path and path.endswith(".json") else "csv"
    return report.to_json() if fmt == "json" else report.to_csv()


def _mode_from_args(args, regime, default):
    if args.mode is None:
        if default is None:
            raise UsageError("--mode is required for this target")
        mode = default
        if args.eps is not None:
            mode = ErrorMode(mode.kind, _eps(args.eps, regime))
        return mode
    kind = MODE_ALIASES[args.mode]
    if kind == "zero":
        return ErrorMode("zero")
    if args.eps is None:
        if default is not None and default.kind == kind:
            return default
        raise UsageError("--eps is required with this --mode")
    return ErrorMode(kind, _eps(args.eps, regime))


def _eps(text, regime):
    try:
        return Fraction(text)
    except ValueError:
        if regime.is_exact:
            raise UsageError("exact machines take a rational --eps")
        return regime.coerce(text)


def _fmt_prob(x, regime):
    if regime.is_exact:
        return str(x)
    return format_fixed(x, 12)


# -- commands ----------------------------------------------------------------

def cmd_construct(args) -> int:
    M = construct(args)
    _write(fileio.dumps(M), args.out)
    if args.out:
        print(f"wrote {M.kind} with {M.n} states to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    M = fileio.load(args.file)
    if isinstance(M, Nfa):
        N = C.nfa_normalize(M)
        print(nfa_accepting_paths(N, args.string))
        return EXIT_OK
    val = accept_value(M, args.string)
    print(str(val) if M.regime.is_exact else format_fixed(val, args.places))
    return EXIT_OK


def cmd_sweep(args) -> int:
    M, oracle, nfa, _, enum = plan(args)
    report = V.sweep(M, oracle, nfa=nfa, jobs=args.jobs, **enum)
    _write(_report_text(report, args.format, args.out), args.out)
    s = report.summary()
    print(f"{s['rows']} rows, {s['members']} members; min member prob {s['min_member_prob'] or '-'}, "
          f"max non-member prob {s['max_non_member_prob'] or '-'}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    M, oracle, nfa, default, enum = plan(args)
    mode = _mode_from_args(args, M.regime, default)
    tol = None
    if not M.regime.is_exact:
        tol = M.regime.coerce(args.tol if args.tol is not None else "1e-9")
    elif args.tol not in (None, "0"):
        raise UsageError("exact machines are verified with zero tolerance")
    if args.batch:
        return _verify_batch(args, M, oracle, nfa, mode, enum)
    report = V.sweep(M, oracle, nfa=nfa, jobs=args.jobs, **enum)
    verdict = V.check_error_mode(report, mode, tol)
    promise_ok = True
    if args.target == "nfa-zero":
        bad = [r for r in report.rows
               if r.paths != (args.paths if r.oracle == V.MEMBER else 0)]
        if bad:
            promise_ok = False
            print(f"FAIL: path-count promise broken at {bad[0].string!r} "
                  f"({bad[0].paths} accepting paths)")
    s = report.summary()
    print(f"{M.kind} n={M.n}; {oracle.name}; mode {mode.kind}, eps {_fmt_prob(mode.epsilon, M.regime) if mode.is_exact_bound else mpmath.nstr(mode.epsilon, 12)}")
    print(f"rows {s['rows']}, members {s['members']}, non-members {s['non_members']}")
    if s["members"]:
        print(f"min member prob {_fmt_prob(report.min_member(), M.regime)}")
    if s["non_members"]:
        worst = report.argmax_non_member()
        print(f"max non-member prob {_fmt_prob(worst.prob, M.regime)} at length {len(worst.string)}")
    print(verdict.describe(M.regime))
    if args.report:
        _write(_report_text(report, args.format, args.report), args.report)
    return EXIT_OK if verdict.passed and promise_ok else EXIT_FAIL


def _verify_batch(args, M, oracle, nfa, mode, enum):
    from .batch import exhaustive_check

    if oracle.codes is None or "max_len" not in enum:
        raise UsageError("--batch needs a built-in binary language (end or modxor) and --max-len")
    if mode.kind == "two-sided":
        raise UsageError("--batch supports zero and one-sided modes")
    res = exhaustive_check(M, oracle.codes, enum["max_len"], nfa=nfa,
                           expected_paths=args.paths if args.target == "nfa-zero" else None,
                           mode=mode.kind, epsilon=mode.epsilon)
    print(f"{M.kind} n={M.n}; {oracle.name}; mode {mode.kind}; batch over {res.rows} strings")
    print(f"members {res.members}, non-members {res.non_members}, "
          f"min member prob {res.min_member}, max non-member prob {res.max_non_member}")
    if res.passed:
        print("PASS")
        return EXIT_OK
    print(f"FAIL: {res.witness_reason}; witness {res.witness!r}")
    return EXIT_FAIL


def cmd_report_diff(args) -> int:
    try:
        a = Path(args.a).read_text(encoding="utf-8").splitlines()
        b = Path(args.b).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for i, (x, y) in enumerate(zip(a, b), 1):
        if x != y:
            print(f"line {i} differs:\n- {x}\n+ {y}")
            return EXIT_FAIL
    if len(a) != len(b):
        print(f"reports differ in length: {len(a)} vs {len(b)} lines")
        return EXIT_FAIL
    print("identical")
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "report-diff": cmd_report_diff,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, fileio.FormatError, AutomatonError, C.ConstructionError,
            NumericsError, V.VerifyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

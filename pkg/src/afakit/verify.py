"""Brute-force oracles, exhaustive sweeps and error-mode certification.

Language oracles are plain arithmetic predicates on strings, never automata,
so that a bug in a construction cannot hide behind the same bug in its check.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .automata import (
    LEFT,
    RIGHT,
    AlphabetError,
    ErrorMode,
    Evaluator,
    Nfa,
    Pfa,
    Qfa,
    pfa_accept_prob,
)
from .numerics import (
    EXACT,
    ColVec,
    Regime,
    SqMat,
    format_fixed,
    format_scalar,
)

MEMBER = "member"
NON_MEMBER = "non-member"
OUTSIDE = "outside-promise"

SCHEMA = "afakit.sweep/1"
MAX_ROWS = 10**6


class VerifyError(ValueError):
    pass


class EnumerationTooLarge(VerifyError):
    pass


# -- oracles -----------------------------------------------------------------

@dataclass(frozen=True)
class LanguageOracle:
    name: str
    alphabet: tuple
    predicate: Callable[[str], str] = field(compare=False)
    promise: Callable[[int], list] | None = field(default=None, compare=False)
    # Vectorized form over integer string codes; see batch.exhaustive_check.
    codes: Callable | None = field(default=None, compare=False)

    def __call__(self, x: str) -> str:
        return self.predicate(x)


def _bool(b: bool) -> str:
    return MEMBER if b else NON_MEMBER


def count_oracle(m: int) -> LanguageOracle:
    return LanguageOracle(f"count(m={m})", ("a",), lambda x: _bool(len(x) == m))


def modp_oracle(p: int) -> LanguageOracle:
    return LanguageOracle(f"modp(p={p})", ("a",), lambda x: _bool(len(x) % p == 0))


def mod2k_oracle(k: int) -> LanguageOracle:
    block = 2**k

    def classify(x: str) -> str:
        if len(x) % block:
            return OUTSIDE
        return _bool((len(x) // block) % 2 == 0)

    return LanguageOracle(f"mod2k(k={k})", ("a",), classify,
                          promise=lambda jmax: ["a" * (j * block) for j in range(jmax + 1)])


def end_oracle(n: int) -> LanguageOracle:
    return LanguageOracle(f"end(n={n})", ("0", "1"), lambda x: _bool(len(x) >= n and x[-n] == "1"),
                          codes=end_member_codes(n))


def modxor_member(x: str, k: int) -> bool:
    period = 2 * k
    if len(x) < period:
        return False
    offset = len(x) % period
    parity = 0
    for pos in range(offset, len(x), period):
        parity ^= x[pos] == "1"
    return parity == 1


def modxor_oracle(k: int) -> LanguageOracle:
    return LanguageOracle(f"modxor(k={k})", ("0", "1"), lambda x: _bool(modxor_member(x, k)),
                          codes=modxor_member_codes(k))


def nfa_oracle(N: Nfa) -> LanguageOracle:
    """Membership by brute-force run counting."""
    return LanguageOracle(f"nfa(n={N.n})", N.alphabet.symbols,
                          lambda x: _bool(brute_force_paths(N, x) > 0))


def cutpoint_oracle(P: Pfa, lam) -> LanguageOracle:
    lam = Fraction(lam)
    return LanguageOracle(f"cutpoint(lambda={lam})", P.alphabet.symbols,
                          lambda x: _bool(pfa_accept_prob(P, x) != lam))


# Vectorized predicates over binary string codes (bit i = symbol at position i).

def _bit(codes, pos):
    return (codes >> pos) & 1


def modxor_member_codes(k: int):
    period = 2 * k

    def member(codes, length):
        if length < period:
            return np.zeros(len(codes), dtype=bool)
        parity = np.zeros(len(codes), dtype=np.int64)
        for pos in range(length % period, length, period):
            parity ^= _bit(codes, pos)
        return parity == 1

    return member


def end_member_codes(n: int):
    def member(codes, length):
        if length < n:
            return np.zeros(len(codes), dtype=bool)
        return _bit(codes, length - n) == 1

    return member


# -- path counting -----------------------------------------------------------

def brute_force_paths(N: Nfa, x: str) -> int:
    """Count complete runs of ``N`` on ``¢x`` (``¢x$`` if it has a right marker) ending in accept.

    Depth-first over the transition relation, memoized on (position, state).
    """
    if N.has_epsilon:
        raise VerifyError("brute-force counting needs an ε-free NFA")
    N.alphabet.check(x)
    tape = [LEFT, *x] + ([RIGHT] if N.right is not None else [])
    succ = N.successor_lists()
    accept = N.accept
    end = len(tape)
    memo: dict = {}

    def runs(pos: int, state: int) -> int:
        key = (pos, state)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if pos == end:
            c = 1 if state in accept else 0
        else:
            c = 0
            for nxt in succ[tape[pos]][state]:
                c += runs(pos + 1, nxt)
        memo[key] = c
        return c

    return runs(0, N.initial)


# -- enumeration -------------------------------------------------------------

def count_strings(alphabet_size: int, max_len: int) -> int:
    return sum(alphabet_size**k for k in range(max_len + 1))


def all_strings(alphabet: Sequence[str], max_len: int) -> Iterable[str]:
    """Every string up to ``max_len`` in shortlex order."""
    for k in range(max_len + 1):
        for t in itertools.product(alphabet, repeat=k):
            yield "".join(t)


def canonical_key(alphabet: Sequence[str]):
    index = {s: i for i, s in enumerate(alphabet)}
    return lambda x: (len(x), tuple(index[c] for c in x))


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class Row:
    string: str
    prob: object
    oracle: str
    paths: int | None = None


@dataclass(frozen=True)
class Verdict:
    passed: bool
    witness: str | None = None
    value: object = None
    reason: str = ""
    residual: object = None

    def __bool__(self):
        return self.passed

    def describe(self, regime: Regime = EXACT) -> str:
        if self.passed:
            s = "PASS"
            if self.residual is not None:
                s += f" (max residual {mpmath.nstr(self.residual, 6)})"
            return s
        val = format_scalar(self.value, regime) if self.value is not None else "?"
        return f"FAIL: {self.reason}; witness {self.witness!r} with value {val}"


@dataclass
class SweepReport:
    machine: str
    oracle: str
    regime: Regime
    rows: list
    mode: ErrorMode | None = None
    tol: object = None
    verdict: Verdict | None = None

    @property
    def members(self) -> list:
        return [r for r in self.rows if r.oracle == MEMBER]

    @property
    def non_members(self) -> list:
        return [r for r in self.rows if r.oracle == NON_MEMBER]

    def min_member(self):
        ps = [r.prob for r in self.members]
        return min(ps) if ps else None

    def max_non_member(self):
        ps = [r.prob for r in self.non_members]
        return max(ps) if ps else None

    def argmax_non_member(self) -> Row | None:
        best = None
        for r in self.non_members:
            if best is None or r.prob > best.prob:
                best = r
        return best

    def _fmt(self, x) -> str:
        if x is None:
            return ""
        if self.regime.is_exact:
            return str(x)
        return format_fixed(x)

    def summary(self) -> dict:
        out = {
            "rows": len(self.rows),
            "members": len(self.members),
            "non_members": len(self.non_members),
            "outside_promise": sum(r.oracle == OUTSIDE for r in self.rows),
            "min_member_prob": self._fmt(self.min_member()),
            "max_non_member_prob": self._fmt(self.max_non_member()),
        }
        if self.mode is not None:
            out["mode"] = self.mode.kind
            eps = self.mode.epsilon
            out["epsilon"] = str(eps) if self.mode.is_exact_bound else format_fixed(eps)
        if self.verdict is not None:
            out["verdict"] = "PASS" if self.verdict.passed else "FAIL"
            out["witness"] = self.verdict.witness
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.regime.is_exact:
            w.writerow(["string", "prob_num", "prob_den", "oracle", "paths"])
            for r in self.rows:
                p = Fraction(r.prob)
                w.writerow([r.string, p.numerator, p.denominator, r.oracle,
                            "" if r.paths is None else r.paths])
        else:
            w.writerow(["string", "prob_decimal", "oracle", "paths"])
            for r in self.rows:
                w.writerow([r.string, format_fixed(r.prob), r.oracle, "" if r.paths is None else r.paths])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "machine": self.machine,
            "oracle": self.oracle,
            "regime": self.regime.kind,
            "precision": self.regime.prec,
            "rows": [
                {"string": r.string, "prob": self._fmt(r.prob), "oracle": r.oracle, "paths": r.paths}
                for r in self.rows
            ],
            "summary": self.summary(),
        }
        return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def _eval_chunk(M, nfa, strings):
    ev = Evaluator(M)
    return [(ev(x), brute_force_paths(nfa, x) if nfa is not None else None) for x in strings]


def sweep(M, oracle: LanguageOracle, max_len: int | None = None, *, strings=None,
          promise_bound: int | None = None, nfa: Nfa | None = None,
          max_rows: int = MAX_ROWS, jobs: int = 1) -> SweepReport:
    """Evaluate ``M`` on every string of an enumeration, next to the oracle's verdict.

    The enumeration is, in order of precedence, ``strings``, the oracle's
    promise set up to ``promise_bound``, or all strings up to ``max_len``.
    ``nfa`` adds a brute-force accepting-path count per row.
    """
    if tuple(M.alphabet.symbols) != tuple(oracle.alphabet):
        raise AlphabetError(f"machine alphabet {M.alphabet.symbols} differs from oracle's {oracle.alphabet}")
    if strings is None:
        if promise_bound is not None:
            if oracle.promise is None:
                raise VerifyError(f"oracle {oracle.name} has no promise set")
            if promise_bound + 1 > max_rows:
                raise EnumerationTooLarge(f"{promise_bound + 1} rows exceeds limit {max_rows}")
            strings = oracle.promise(promise_bound)
        elif max_len is not None:
            total = count_strings(len(M.alphabet), max_len)
            if total > max_rows:
                raise EnumerationTooLarge(f"{total} rows exceeds limit {max_rows}")
            strings = all_strings(M.alphabet.symbols, max_len)
        else:
            raise VerifyError("need max_len, promise_bound or explicit strings")
    strings = sorted(set(strings), key=canonical_key(M.alphabet.symbols))
    if len(strings) > max_rows:
        raise EnumerationTooLarge(f"{len(strings)} rows exceeds limit {max_rows}")
    if jobs > 1 and len(strings) > 1:
        size = math.ceil(len(strings) / jobs)
        chunks = [strings[i:i + size] for i in range(0, len(strings), size)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_eval_chunk, [M] * len(chunks), [nfa] * len(chunks), chunks))
        values = [v for part in parts for v in part]
    else:
        values = _eval_chunk(M, nfa, strings)
    rows = [Row(x, p, oracle(x), paths) for x, (p, paths) in zip(strings, values)]
    note = getattr(M, "note", "")
    desc = f"{M.kind} n={M.n}" + (f" ({note})" if note else "")
    return SweepReport(desc, oracle.name, M.regime, rows)


# -- certification -----------------------------------------------------------

def _needs_equality(mode: ErrorMode) -> bool:
    return mode.kind != "two-sided"


def check_error_mode(report: SweepReport, mode: ErrorMode, tol=None) -> Verdict:
    """Certify the rows of ``report`` against ``mode``; first violation is the witness.

    Bounds are non-strict (``<=``).  Exact reports compare literally; real
    reports require an explicit ``tol`` whenever the mode demands an exact
    0 or 1, and every comparison is relaxed by ``tol``.
    """
    regime = report.regime
    if regime.is_exact:
        if not mode.is_exact_bound:
            raise VerifyError("exact report checked against a non-rational error bound")
        if tol not in (None, 0):
            raise VerifyError("exact reports are checked with zero tolerance")
        slack = Fraction(0)
        eps = mode.epsilon
        ctx = None
    else:
        if tol is None and _needs_equality(mode):
            raise VerifyError(f"{mode.kind} on a real-regime machine needs an explicit tolerance")
        ctx = regime.workprec()
        ctx.__enter__()
        slack = regime.coerce(tol if tol is not None else 0)
        eps = regime.coerce(mode.epsilon)
    try:
        residual = None if regime.is_exact else regime.coerce(0)
        for r in report.rows:
            if r.oracle == OUTSIDE:
                continue
            f = r.prob
            if r.oracle == MEMBER:
                if mode.kind in ("negative-one-sided", "zero"):
                    dev = abs(f - 1)
                    ok, why = dev <= slack, "member not accepted with probability 1"
                else:
                    dev = None
                    ok, why = f >= 1 - eps - slack, "member accepted below 1 - epsilon"
            else:
                if mode.kind in ("positive-one-sided", "zero"):
                    dev = abs(f)
                    ok, why = dev <= slack, "non-member accepted with nonzero probability"
                else:
                    dev = None
                    ok, why = f <= eps + slack, "non-member accepted above epsilon"
            if dev is not None and residual is not None and dev > residual:
                residual = dev
            if not ok:
                v = Verdict(False, r.string, f, why)
                report.mode, report.tol, report.verdict = mode, tol, v
                return v
        v = Verdict(True, residual=residual)
        report.mode, report.tol, report.verdict = mode, tol, v
        return v
    finally:
        if ctx is not None:
            ctx.__exit__(None, None, None)


def _as_real(x, prec):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def equivalence_sweep(M1, M2, max_len: int, tol=0, max_rows: int = MAX_ROWS) -> Verdict:
    """PASS iff the two machines' values differ by at most ``tol`` on every string up to ``max_len``."""
    if tuple(M1.alphabet.symbols) != tuple(M2.alphabet.symbols):
        raise AlphabetError("machines have different alphabets")
    total = count_strings(len(M1.alphabet), max_len)
    if total > max_rows:
        raise EnumerationTooLarge(f"{total} rows exceeds limit {max_rows}")
    e1, e2 = Evaluator(M1), Evaluator(M2)
    exact = M1.regime.is_exact and M2.regime.is_exact
    prec = max(M1.regime.prec, M2.regime.prec, 53)
    worst = Fraction(0) if exact else mpmath.mpf(0)
    with mpmath.workprec(prec):
        limit = Fraction(tol) if exact else _as_real(Fraction(tol) if isinstance(tol, (int, str)) else tol, prec)
        for x in all_strings(M1.alphabet.symbols, max_len):
            a, b = e1(x), e2(x)
            d = abs(a - b) if exact else abs(_as_real(a, prec) - _as_real(b, prec))
            if d > worst:
                worst = d
            if d > limit:
                return Verdict(False, x, d, f"values differ by more than {tol}", residual=worst)
    return Verdict(True, residual=worst)


# -- seeded random machines for property checks ------------------------------

def random_nfa(rng: random.Random, n: int, alphabet=("0", "1"), density: float = 0.35) -> Nfa:
    """ε-free NFA with random 0/1 relations; ``¢`` is the identity."""
    delta = {}
    for sym in alphabet:
        delta[sym] = SqMat.from_rows([[int(rng.random() < density) for _ in range(n)] for _ in range(n)])
    accept = {i for i in range(n) if rng.random() < 0.4} or {rng.randrange(n)}
    return Nfa(n, tuple(alphabet), delta, 0, accept)


def random_rational(rng: random.Random, lo=-5, hi=5, maxden=4) -> Fraction:
    return Fraction(rng.randint(lo * maxden, hi * maxden), rng.randint(1, maxden))


def random_linear_system(rng: random.Random, n: int, length: int):
    from .constructions import LinearSystem

    v0 = ColVec.of([random_rational(rng) for _ in range(n)])
    mats = [SqMat.from_rows([[random_rational(rng) for _ in range(n)] for _ in range(n)]) for _ in range(length)]
    return LinearSystem(v0, mats)


def random_stochastic(rng: random.Random, n: int, maxden: int = 4) -> SqMat:
    cols = []
    for _ in range(n):
        weights = [rng.randint(0, maxden) for _ in range(n)]
        if not any(weights):
            weights[rng.randrange(n)] = 1
        s = sum(weights)
        cols.append([Fraction(w, s) for w in weights])
    return SqMat.from_columns(cols)


def random_pfa(rng: random.Random, n: int, alphabet=("a", "b"), markers: bool = True) -> Pfa:
    ops = {sym: random_stochastic(rng, n) for sym in alphabet}
    if markers:
        ops[LEFT] = random_stochastic(rng, n)
        ops[RIGHT] = random_stochastic(rng, n)
    accept = {i for i in range(n) if rng.random() < 0.5} or {0}
    return Pfa(n, tuple(alphabet), ops, rng.randrange(n), accept)


def givens(n: int, i: int, j: int, steps: int, regime: Regime) -> SqMat:
    """Rotation by ``steps * pi/12`` in the ``(i, j)`` plane."""
    with regime.workprec():
        angle = mpmath.pi * steps / 12
        c, s = mpmath.cos(angle), mpmath.sin(angle)
        rows = [[1 if a == b else 0 for b in range(n)] for a in range(n)]
        rows[i][i], rows[j][j] = c, c
        rows[i][j], rows[j][i] = -s, s
        return SqMat.from_rows(rows, regime)


def random_qfa(rng: random.Random, n: int, alphabet=("a", "b"), prec: int | None = None) -> Qfa:
    """Real QFA whose operators are products of at most three Givens rotations."""
    from .numerics import matmul

    r = Regime.real(prec)
    ops = {}
    for sym in (LEFT,) + tuple(alphabet) + (RIGHT,):
        U = SqMat.identity(n, r)
        if n >= 2:
            for _ in range(rng.randint(0, 3)):
                i, j = rng.sample(range(n), 2)
                U = matmul(givens(n, i, j, rng.randrange(24), r), U)
        ops[sym] = U
    accept = {i for i in range(n) if rng.random() < 0.5} or {rng.randrange(n)}
    return Qfa(n, tuple(alphabet), ops, rng.randrange(n), accept, r)

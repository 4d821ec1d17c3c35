"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N PASS/FAIL`` line; the lines are
repeated in the pytest terminal summary.
"""
import math
import random
import time
from fractions import Fraction

import mpmath
import pytest

from afakit import constructions as C
from afakit import verify as V
from afakit.automata import (
    LEFT,
    RIGHT,
    Afa,
    Evaluator,
    InvalidOperatorError,
    Nfa,
    Pfa,
    nfa_accepts,
)
from afakit.batch import exhaustive_check
from afakit.numerics import (
    SqMat,
    apply,
    first_invalid_column,
    validate_affine_operator,
    validate_affine_state,
    zeta,
)


def count_value(m, t, l):
    return Fraction(1) if l == m else Fraction(1, 2 * t * abs(m - l) + 1)


def test_criterion_1_count(criterion):
    with criterion(1, "COUNT_m exact values, m<=10, t in {1,2,5,10}, l<=30") as c:
        start = time.perf_counter()
        checked = 0
        for m in range(11):
            for t in (1, 2, 5, 10):
                ev = Evaluator(C.count_afa(m, t))
                for l in range(31):
                    f = ev("a" * l)
                    assert f == count_value(m, t, l), (m, t, l, f)
                    if l != m:
                        assert f <= Fraction(1, 2 * t + 1)
                    checked += 1
        elapsed = time.perf_counter() - start
        c.detail = f"{checked} values in {elapsed:.2f}s"
        assert elapsed < 5


def test_criterion_2_mod_p(criterion):
    with criterion(2, "MOD_p at 128 bits, p in {3,5,7,11}, l<=5p") as c:
        start = time.perf_counter()
        notes = []
        for p in (3, 5, 7, 11):
            with mpmath.workprec(128):
                cot = mpmath.cot(mpmath.pi / p)
            t = math.ceil(10 * cot)
            M = C.mod_p_afa(p, t, prec=128)
            assert M.regime.prec == 128
            ev = Evaluator(M)
            best_l, best = None, None
            with mpmath.workprec(128):
                bound = cot / t + mpmath.mpf("1e-6")
                for l in range(5 * p + 1):
                    f = ev("a" * l)
                    if l % p == 0:
                        assert abs(f - 1) < mpmath.mpf("1e-6"), (p, l, f)
                    else:
                        assert f < bound, (p, l, f)
                        if best is None or f > best:
                            best_l, best = l, f
            assert best_l % p in ((p - 1) // 2, (p + 1) // 2), (p, best_l)
            notes.append(f"p={p}: max {mpmath.nstr(best, 6)} at l={best_l}")
        elapsed = time.perf_counter() - start
        c.detail = "; ".join(notes) + f"; {elapsed:.2f}s"
        assert elapsed < 10


def test_criterion_3_mod2k(criterion):
    with criterion(3, "MOD2^k on a^(j*2^k), k<=6, j<=16") as c:
        start = time.perf_counter()
        tol = mpmath.mpf("1e-9")
        for k in range(1, 7):
            M = C.mod2k_afa(k, exact=False)
            ev = Evaluator(M)
            with M.regime.workprec():
                for j in range(17):
                    f = ev("a" * (j * 2**k))
                    assert abs(f - (1 if j % 2 == 0 else 0)) <= tol, (k, j, f)
        exact = C.mod2k_afa(1)
        assert exact.regime.is_exact
        ev = Evaluator(exact)
        for j in range(17):
            f = ev("a" * (2 * j))
            assert f == (1 if j % 2 == 0 else 0) and type(f) is int, (j, f)
        elapsed = time.perf_counter() - start
        c.detail = f"{elapsed:.2f}s"
        assert elapsed < 5


def test_criterion_4_nfa_one_sided(criterion):
    with criterion(4, "100 random NFAs, strings <= 8, t in {1,5}") as c:
        start = time.perf_counter()
        rng = random.Random(20240401)
        members = rows = 0
        strings = list(V.all_strings(("0", "1"), 8))
        for _ in range(100):
            N = V.random_nfa(rng, rng.randint(2, 6))
            alpha = {x: V.brute_force_paths(N, x) for x in strings}
            members += sum(a > 0 for a in alpha.values())
            for t in (1, 5):
                M = C.nfa_to_afa(N, t)
                assert M.n == N.n + 1
                ev = Evaluator(M)
                for x in strings:
                    a = alpha[x]
                    expected = Fraction(2 * t * a, 2 * t * a + 1)
                    assert ev(x) == expected, (x, a, t)
                    rows += 1
        elapsed = time.perf_counter() - start
        c.detail = f"{rows} rows, {members} member strings, {elapsed:.1f}s"
        assert 0 < members < 100 * len(strings)
        assert elapsed < 60


def _zero_error_sweep(N, oracle, max_len, k=1):
    M = C.nfa_to_afa_zero_error(N, k)
    assert M.n == N.n + 1
    report = V.sweep(M, oracle, max_len, nfa=N)
    assert V.check_error_mode(report, V.ErrorMode("zero")).passed
    for r in report.rows:
        assert r.paths == (k if r.oracle == V.MEMBER else 0), (r.string, r.paths)
        assert r.prob == (1 if r.oracle == V.MEMBER else 0)
    return len(report.rows)


def test_criterion_5_zero_error(criterion):
    with criterion(5, "zero-error AfA for END_n (n<=8) and MODXOR_k (k<=3)") as c:
        start = time.perf_counter()
        rows = 0
        for n in range(1, 9):
            N = C.end_nfa(n)
            assert N.n == n + 1
            rows += _zero_error_sweep(N, V.end_oracle(n), n + 4)
        rows += _zero_error_sweep(C.modxor_nfa(1), V.modxor_oracle(1), 8)
        for k in (2, 3):
            N = C.modxor_nfa(k)
            assert N.n == 4 * k
            res = exhaustive_check(C.nfa_to_afa_zero_error(N), V.modxor_member_codes(k), 8 * k,
                                   nfa=N, expected_paths=1)
            assert res.passed, (k, res.witness, res.witness_reason)
            assert res.min_member == 1 and res.max_non_member == 0
            assert res.path_counts_seen == {1}
            rows += res.rows
        # two disjoint copies: every member has exactly two accepting paths
        rows += _zero_error_sweep(C.nfa_union(C.end_nfa(3), C.end_nfa(3)), V.end_oracle(3), 7, k=2)
        N = C.modxor_nfa(2)
        U = C.nfa_union(N, N)
        res = exhaustive_check(C.nfa_to_afa_zero_error(U, 2), V.modxor_member_codes(2), 16,
                               nfa=U, expected_paths=2)
        assert res.passed and res.path_counts_seen == {2}
        rows += res.rows
        elapsed = time.perf_counter() - start
        c.detail = f"{rows} strings, {elapsed:.1f}s"
        assert elapsed < 120


def test_criterion_6_affine_embedding(criterion):
    with criterion(6, "200 random linear systems embed exactly") as c:
        rng = random.Random(6006)
        for _ in range(200):
            n = rng.randint(1, 5)
            system = V.random_linear_system(rng, n, rng.randint(0, 6))
            v0, ops = C.embed_linear(system)
            assert validate_affine_state(v0)
            assert all(validate_affine_operator(A) for A in ops)
            v, w = system.v0, v0
            for A, B in zip(system.mats, ops):
                v, w = apply(A, v), apply(B, w)
            assert w.entries == v.entries + (1 - zeta(v),)
        c.detail = "200 systems"


def test_criterion_7_qfa(criterion):
    with criterion(7, "50 random real QFAs agree with their AfA to 1e-9") as c:
        start = time.perf_counter()
        rng = random.Random(7007)
        worst = mpmath.mpf(0)
        for _ in range(50):
            n = rng.randint(1, 3)
            Q = V.random_qfa(rng, n)
            M = C.qfa_to_afa(Q)
            assert M.n == n * n + 1
            verdict = V.equivalence_sweep(M, Q, 8, tol=mpmath.mpf("1e-9"))
            assert verdict.passed, verdict.describe(M.regime)
            worst = max(worst, verdict.residual)
        c.detail = f"max |diff| {mpmath.nstr(worst, 3)}, {time.perf_counter() - start:.1f}s"


def _deterministic_column(rng, n):
    j = rng.randrange(n)
    return [1 if i == j else 0 for i in range(n)]


def test_criterion_8_exclusive_cutpoint(criterion):
    with criterion(8, "exclusive cutpoint AfA for 20 random PFAs, lambda in {0,1/3,1/2}") as c:
        rng = random.Random(8008)
        strings = list(V.all_strings(("a", "b"), 6))
        counts = {}
        for _ in range(20):
            P = V.random_pfa(rng, rng.randint(1, 3))
            for lam in (Fraction(0), Fraction(1, 3), Fraction(1, 2)):
                for t in (1, 4):
                    M = C.exclusive_cutpoint_afa(C.CutpointSpec(P, lam), t)
                    ev_m, ev_p = Evaluator(M), Evaluator(P)
                    for x in strings:
                        fm, fp = ev_m(x), ev_p(x)
                        if fp == lam:
                            assert fm == 0, (x, lam)
                            counts["on"] = counts.get("on", 0) + 1
                        else:
                            assert fm >= Fraction(2 * t, 2 * t + 1), (x, lam, fm)
                            counts["off"] = counts.get("off", 0) + 1
        assert counts.get("on") and counts.get("off")
        # 0/1 operators: the PFA is a DFA, and cutpoint 0 means "some run accepts"
        agree = 0
        for _ in range(20):
            n = rng.randint(1, 3)
            cols = {s: SqMat.from_columns([_deterministic_column(rng, n) for _ in range(n)])
                    for s in (LEFT, "a", "b", RIGHT)}
            accept = {i for i in range(n) if rng.random() < 0.5} or {0}
            P = Pfa(n, ("a", "b"), cols, 0, accept)
            N = C.nfa_normalize(Nfa(n, ("a", "b"), {s: cols[s] for s in (LEFT, "a", "b")}, 0, accept,
                                    right=cols[RIGHT]))
            M = C.exclusive_cutpoint_afa(C.CutpointSpec(P, 0))
            ev = Evaluator(M)
            for x in strings:
                assert (ev(x) > 0) == nfa_accepts(N, x), x
                agree += 1
        c.detail = f"{counts['on']} exact-lambda rows, {counts['off']} others, {agree} NFA checks"


def _all_machines():
    rng = random.Random(9009)
    yield C.count_afa(5, 3)
    yield C.count_afa(0, 1)
    for p in (3, 5, 7):
        yield C.mod_p_afa(p, 10)
    yield C.mod2k_afa(1)
    for k in (1, 2, 3):
        yield C.mod2k_afa(k, exact=False)
    for n in (1, 3):
        yield C.nfa_to_afa(C.end_nfa(n), 2)
        yield C.nfa_to_afa_zero_error(C.end_nfa(n))
    yield C.nfa_to_afa_zero_error(C.modxor_nfa(2))
    for _ in range(5):
        N = V.random_nfa(rng, 3)
        yield C.nfa_to_afa(N, 3)
        P = V.random_pfa(rng, 3)
        yield C.pfa_to_afa(P)
        yield C.exclusive_cutpoint_afa(C.CutpointSpec(P, Fraction(1, 3)), 2)
        yield C.qfa_to_afa(V.random_qfa(rng, 2))


def test_criterion_9_validity(criterion):
    with criterion(9, "every emitted operator is affine; printed COUNT_m $-matrix rejected") as c:
        ops = 0
        for M in _all_machines():
            for sym in M.alphabet.marked:
                assert validate_affine_operator(M.ops[sym]), (M.note, sym)
                ops += 1
        fixed = C.count_afa(5, 3).ops[RIGHT]
        assert validate_affine_operator(fixed)
        printed = C.printed_count_end_operator(3)
        assert not validate_affine_operator(printed)
        assert first_invalid_column(printed) == (1, 0)
        good = C.count_afa(5, 3)
        bad_ops = dict(good.ops)
        bad_ops[RIGHT] = printed
        with pytest.raises(InvalidOperatorError, match="column sum 0"):
            Afa(3, ("a",), bad_ops, 0, {0})
        c.detail = f"{ops} operators"

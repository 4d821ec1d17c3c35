"""Constructions that emit validated affine automata.

Every function here returns an immutable machine whose operators have already
passed the affine (or stochastic / orthogonal) validity checks on
construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .automata import LEFT, RIGHT, Afa, AutomatonError, Nfa, Pfa, Qfa
from .numerics import (
    EXACT,
    ColVec,
    DimensionError,
    Regime,
    SqMat,
    kron,
    matmul,
    zeta,
)


class ConstructionError(ValueError):
    pass


@dataclass(frozen=True)
class LinearSystem:
    v0: ColVec
    mats: tuple

    def __post_init__(self):
        object.__setattr__(self, "mats", tuple(self.mats))
        for A in self.mats:
            if A.dim != self.v0.dim:
                raise DimensionError("linear system dimensions disagree")
            if A.regime != self.v0.regime:
                raise DimensionError("linear system regimes disagree")


@dataclass(frozen=True)
class CutpointSpec:
    pfa: Pfa
    lam: Fraction

    def __post_init__(self):
        if not self.pfa.regime.is_exact:
            raise ConstructionError("cutpoint construction needs a rational PFA")
        lam = self.lam
        if not isinstance(lam, (int, Fraction, str)):
            raise ConstructionError(f"cutpoint must be rational, got {lam!r}")
        lam = Fraction(lam)
        if not 0 <= lam <= 1:
            raise ConstructionError("cutpoint must lie in [0, 1]")
        object.__setattr__(self, "lam", lam)


def _sharpness(t) -> int:
    if isinstance(t, bool) or not isinstance(t, int) or t < 1:
        raise ConstructionError(f"sharpness t must be a positive integer, got {t!r}")
    return t


# -- generic embedding -------------------------------------------------------

def embed_vector(v: ColVec) -> ColVec:
    return v.extended(1 - zeta(v))


def embed_operator(A: SqMat) -> SqMat:
    """Append a completing row ``1 - zeta(column)`` and a fresh column ``e_{n+1}``."""
    r = A.regime
    n = A.dim
    with r.workprec():
        last = tuple(1 - zeta(A.col(j)) for j in range(n)) + (r.coerce(1),)
    zero = r.coerce(0)
    rows = tuple(row + (zero,) for row in A.rows) + (last,)
    return SqMat(rows, r)


def embed_linear(sys: LinearSystem) -> tuple[ColVec, list[SqMat]]:
    """Affine embedding of an arbitrary linear system into one more dimension."""
    return embed_vector(sys.v0), [embed_operator(A) for A in sys.mats]


def _pad(A: SqMat, dim: int) -> SqMat:
    """Extend ``A`` by identity on extra coordinates."""
    if A.dim >= dim:
        return A
    r = A.regime
    zero, one = r.coerce(0), r.coerce(1)
    n = A.dim
    rows = [tuple(row) + (zero,) * (dim - n) for row in A.rows]
    for i in range(n, dim):
        rows.append(tuple(one if j == i else zero for j in range(dim)))
    return SqMat(tuple(rows), r)


def _collapse(columns: list, regime: Regime) -> SqMat:
    return SqMat.from_columns(columns, regime)


def _unit(dim: int, i: int) -> list:
    return [1 if k == i else 0 for k in range(dim)]


# -- simulations -------------------------------------------------------------

def pfa_to_afa(P: Pfa) -> Afa:
    """A PFA is already an AfA with the same operators."""
    return Afa(P.n, P.alphabet, dict(P.ops), P.initial, P.accept, P.regime,
               note=P.note or "PFA read as an AfA")


def _integer_scaled(A: SqMat) -> SqMat:
    d, B = A.integer_form()
    return SqMat.from_rows(B, EXACT)


def exclusive_cutpoint_afa(spec: CutpointSpec, t: int = 1) -> Afa:
    """Integer AfA accepting ``{x : f_P(x) != lam}`` with positive one-sided error.

    Non-members (``f_P(x) == lam``) get probability exactly 0; members get
    ``2t|a| / (2t|a| + 1)`` for a nonzero integer ``a``, hence at least
    ``2t / (2t + 1)``.
    """
    t = _sharpness(t)
    P, lam = spec.pfa, spec.lam
    n = P.n
    dim = max(n + 1, 3)
    ops = {}
    for sym in (LEFT,) + P.alphabet.symbols:
        ops[sym] = _pad(embed_operator(_integer_scaled(P.ops[sym])), dim)
    weights = [lam.denominator * (1 if i in P.accept else 0) - lam.numerator for i in range(n)]
    cols = [[t * c, -t * c, 1] + [0] * (dim - 3) for c in weights]
    cols += [_unit(dim, 2) for _ in range(dim - n)]
    final = matmul(_collapse(cols, EXACT), _pad(embed_operator(_integer_scaled(P.ops[RIGHT])), dim))
    ops[RIGHT] = final
    return Afa(dim, P.alphabet, ops, P.initial, {0, 1}, EXACT,
               note=f"exclusive cutpoint language of a rational PFA, lambda={lam}, t={t}")


def qfa_to_afa(Q: Qfa) -> Afa:
    """Exact simulation of a real QFA through the tensor square of its evolution."""
    n = Q.n
    r = Q.regime
    dim = n * n + 1
    ops = {}
    for sym in (LEFT,) + Q.alphabet.symbols:
        U = Q.ops[sym]
        ops[sym] = embed_operator(kron(U, U))
    U = Q.ops[RIGHT]
    acc_diag = {i * n + i for i in Q.accept}
    cols = [_unit(dim, 0) if j in acc_diag else _unit(dim, 1) for j in range(dim)]
    ops[RIGHT] = matmul(_collapse(cols, r), embed_operator(kron(U, U)))
    return Afa(dim, Q.alphabet, ops, Q.initial * n + Q.initial, {0}, r,
               note=f"tensor-square simulation of a {n}-state real QFA")


# -- three-state machines ----------------------------------------------------

def count_afa(m: int, t: int = 1) -> Afa:
    """3-state AfA for ``{a^m}``: members get 1, ``a^l`` gets ``1/(2t|m-l|+1)``."""
    if isinstance(m, bool) or not isinstance(m, int) or m < 0:
        raise ConstructionError("m must be a nonnegative integer")
    t = _sharpness(t)
    ops = {
        LEFT: [[1, 0, 0], [m, 1, 0], [-m, 0, 1]],
        "a": [[1, 0, 0], [-1, 1, 0], [1, 0, 1]],
        # Scales the counter coordinates by t while keeping every column affine.
        RIGHT: [[1, 1 - t, 1 - t], [0, t, 0], [0, 0, t]],
    }
    return Afa(3, ("a",), ops, 0, {0}, EXACT, note=f"COUNT_m with m={m}, t={t}")


# Right-marker operator as printed for the COUNT_m machine; its second and
# third columns sum to 0, so it is kept only to exercise the validator.
def printed_count_end_operator(t: int) -> SqMat:
    return SqMat.from_rows([[1, -t, -t], [0, t, 0], [0, 0, t]])


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % q for q in range(2, math.isqrt(p) + 1))


def mod_p_afa(p: int, t, prec: int | None = None) -> Afa:
    """3-state AfA for ``{a^(jp)}`` built from a rotation by ``2*pi/p``.

    Members are accepted with probability 1 (up to rounding); non-members with
    probability below ``cot(pi/p) / t``.  ``t`` must exceed ``cot(pi/p)``.
    """
    if isinstance(p, bool) or not isinstance(p, int) or p < 3 or not is_prime(p):
        raise ConstructionError(f"p must be an odd prime, got {p!r}")
    r = Regime.real(prec)
    tt = r.coerce(t)
    with r.workprec():
        if not tt > mpmath.cot(mpmath.pi / p):
            raise ConstructionError(f"t must exceed cot(pi/{p}) = {mpmath.nstr(mpmath.cot(mpmath.pi / p), 8)}")
        theta = 2 * mpmath.pi / p
        c, s = mpmath.cos(theta), mpmath.sin(theta)
        ops = {
            "a": [[c, -s, 0], [s, c, 0], [1 - c - s, 1 + s - c, 1]],
            RIGHT: [[1, 0, 0], [0, tt, 0], [0, 1 - tt, 1]],
        }
        ops = {k: SqMat.from_rows(v, r) for k, v in ops.items()}
    return Afa(3, ("a",), ops, 0, {0}, r, note=f"MOD_p with p={p}, t={t}")


def mod2k_afa(k: int, prec: int | None = None, exact: bool | None = None) -> Afa:
    """3-state zero-error AfA for the promise problem on ``a^(j 2^k)``: accept iff ``j`` even.

    ``k = 1`` defaults to the exact regime (the rotation is by a right
    angle); larger ``k`` need the real regime.
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConstructionError("k must be a positive integer")
    if exact is None:
        exact = k == 1
    if exact and k != 1:
        raise ConstructionError("only k = 1 has a rational rotation")
    r = EXACT if exact else Regime.real(prec)
    with r.workprec():
        if exact:
            c, s = Fraction(0), Fraction(1)
        else:
            angle = mpmath.pi / 2**k
            c, s = mpmath.cos(angle), mpmath.sin(angle)
        rot = SqMat.from_rows([[c, -s], [s, c]], r)
        ops = {
            "a": embed_operator(rot),
            RIGHT: SqMat.from_rows([[1, 0, Fraction(1, 2)], [0, 1, 0], [0, 0, Fraction(1, 2)]], r),
        }
    return Afa(3, ("a",), ops, 0, {0}, r, note=f"MOD2^k promise problem with k={k}")


# -- NFAs --------------------------------------------------------------------

def _rel_sets(M: SqMat) -> list[set]:
    """Successor sets: ``out[i]`` holds every ``j`` with ``M[j, i] == 1``."""
    n = M.dim
    return [{j for j in range(n) if M.rows[j][i]} for i in range(n)]


def _from_sets(succ: list[set], n: int) -> SqMat:
    return SqMat.from_rows([[1 if j in succ[i] else 0 for i in range(n)] for j in range(n)])


def _closure(eps: SqMat | None, n: int) -> list[set]:
    succ = _rel_sets(eps) if eps is not None else [set() for _ in range(n)]
    out = []
    for i in range(n):
        seen = {i}
        stack = [i]
        while stack:
            u = stack.pop()
            for w in succ[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        out.append(seen)
    return out


def _compose(first: list[set], then: list[set]) -> list[set]:
    return [set().union(*(then[j] for j in first[i])) if first[i] else set() for i in range(len(first))]


def nfa_normalize(N: Nfa) -> Nfa:
    """Remove ε-transitions (no new states) and the right end-marker (one new state)."""
    if N.is_normal:
        return N
    n = N.n
    close = _closure(N.epsilon, n)
    delta = {}
    # ¢ absorbs the ε-closure of the start as well as the closure after it.
    delta[LEFT] = _compose(_compose(close, _rel_sets(N.delta[LEFT])), close)
    for sym in N.alphabet.symbols:
        delta[sym] = _compose(_rel_sets(N.delta[sym]), close)
    accept = set(N.accept)
    size = n
    if N.right is not None:
        right = _compose(_rel_sets(N.right), close)
        # A state "finishes" if reading $ from it can land in an accepting state.
        finishes = {i for i in range(n) if right[i] & accept}
        f = n
        size = n + 1
        for sym, succ in delta.items():
            for i in range(n):
                if succ[i] & finishes:
                    succ[i] = succ[i] | {f}
            succ.append(set())
        accept = {f}
    mats = {sym: _from_sets(succ, size) for sym, succ in delta.items()}
    return Nfa(size, N.alphabet, mats, N.initial, accept, note=N.note)


def _require_nfa(N: Nfa):
    if not N.is_normal:
        raise ConstructionError("NFA must be ε-free without a right end-marker; run nfa_normalize")
    if N.n <= 1:
        raise ConstructionError("NFA needs more than one state")


def nfa_to_afa(N: Nfa, t: int = 1) -> Afa:
    """(n+1)-state AfA: non-members get 0, members ``2ta/(2ta+1)`` for ``a`` accepting paths."""
    _require_nfa(N)
    t = _sharpness(t)
    dim = N.n + 1
    ops = {sym: embed_operator(N.delta[sym]) for sym in (LEFT,) + N.alphabet.symbols}
    cols = []
    for i in range(dim):
        if i in N.accept:
            cols.append([t, -t, 1] + [0] * (dim - 3))
        else:
            cols.append(_unit(dim, 2))
    ops[RIGHT] = _collapse(cols, EXACT)
    return Afa(dim, N.alphabet, ops, N.initial, {0, 1}, EXACT,
               note=f"one-sided simulation of a {N.n}-state NFA, t={t}")


def nfa_to_afa_zero_error(N: Nfa, k: int = 1) -> Afa:
    """(n+1)-state AfA that is exact when every member has exactly ``k`` accepting paths."""
    _require_nfa(N)
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConstructionError("path multiplicity k must be a positive integer")
    dim = N.n + 1
    ops = {sym: embed_operator(N.delta[sym]) for sym in (LEFT,) + N.alphabet.symbols}
    share = Fraction(1, k)
    cols = []
    for i in range(dim):
        if i in N.accept:
            cols.append([share, 0, 1 - share] + [0] * (dim - 3))
        else:
            cols.append(_unit(dim, 2))
    ops[RIGHT] = _collapse(cols, EXACT)
    return Afa(dim, N.alphabet, ops, N.initial, {0}, EXACT,
               note=f"zero-error simulation of a {N.n}-state NFA with {k} accepting path(s) per member")


def end_nfa(n: int) -> Nfa:
    """NFA for "the n-th symbol from the end is 1": a guessing loop plus an n-step chain."""
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConstructionError("n must be a positive integer")
    size = n + 1
    zero = [set() for _ in range(size)]
    one = [set() for _ in range(size)]
    zero[0] = {0}
    one[0] = {0, 1}
    for i in range(1, n):
        zero[i] = {i + 1}
        one[i] = {i + 1}
    delta = {"0": _from_sets(zero, size), "1": _from_sets(one, size)}
    return Nfa(size, ("0", "1"), delta, 0, {n}, note=f"END_n with n={n}")


def modxor_nfa(k: int) -> Nfa:
    """Single-accepting-path NFA for MODXOR_k with 4k states.

    State ``c + 2k*b`` tracks the phase ``c = (i - t) mod 2k`` for the guessed
    offset ``t`` and the running parity ``b`` of the marked bits (those read
    at phase 0).  Only the guess ``t = |w| mod 2k`` can finish at phase 0.
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise ConstructionError("k must be a positive integer")
    period = 2 * k
    size = 2 * period
    idx = lambda c, b: c + period * b  # noqa: E731
    left = [set() for _ in range(size)]
    left[idx(0, 0)] = {idx(c, 0) for c in range(period)}
    delta = {LEFT: _from_sets(left, size)}
    for sym in ("0", "1"):
        succ = [set() for _ in range(size)]
        for c in range(period):
            for b in (0, 1):
                flip = 1 if (sym == "1" and c == 0) else 0
                succ[idx(c, b)] = {idx((c + 1) % period, b ^ flip)}
        delta[sym] = _from_sets(succ, size)
    return Nfa(size, ("0", "1"), delta, idx(0, 0), {idx(0, 1)}, note=f"MODXOR_k with k={k}")


def nfa_union(N1: Nfa, N2: Nfa) -> Nfa:
    """Disjoint union; the accepting-path count of the result is the sum of both."""
    for N in (N1, N2):
        if not N.is_normal:
            raise ConstructionError("union needs normalized NFAs")
    if N1.alphabet != N2.alphabet:
        raise AutomatonError("alphabets differ")
    n1, size = N1.n, N1.n + N2.n
    mats = {}
    for sym in (LEFT,) + N1.alphabet.symbols:
        s1 = _rel_sets(N1.delta[sym])
        s2 = [{j + n1 for j in s} for s in _rel_sets(N2.delta[sym])]
        succ = s1 + s2
        if sym == LEFT:
            # Both copies start together, from the first copy's initial state.
            succ[N1.initial] = succ[N1.initial] | s2[N2.initial]
        mats[sym] = _from_sets(succ, size)
    accept = set(N1.accept) | {j + n1 for j in N2.accept}
    return Nfa(size, N1.alphabet, mats, N1.initial, accept, note="disjoint union of two NFAs")

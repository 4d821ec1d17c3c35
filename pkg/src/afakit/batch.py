"""Vectorized exhaustive certification for enumerations too large for row reports.

Strings are expanded level by level (a trie walked depth-first in blocks), so
each string costs one matrix-vector step from its parent.  Affine states are
carried as integer vectors: every operator is scaled by the lcm of its
denominators, which multiplies the final state by a positive constant and
leaves the weighting unchanged.  All arithmetic is exact ``int64``; a block
whose entries could overflow is recomputed with Python integers.

NFA path counts are obtained by expanding explicit runs (one array entry per
live run), independently of the affine operators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .automata import LEFT, RIGHT, Afa, Nfa
from .verify import EnumerationTooLarge, count_strings

_LIMIT = 2**62


@dataclass
class BatchResult:
    rows: int = 0
    members: int = 0
    non_members: int = 0
    min_member: Fraction | None = None
    max_non_member: Fraction | None = None
    path_violations: int = 0
    witness: str | None = None
    witness_reason: str = ""
    path_counts_seen: set = field(default_factory=set)

    @property
    def passed(self) -> bool:
        return self.witness is None


def _int_matrix(A) -> np.ndarray:
    _, B = A.integer_form()
    return np.array(B, dtype=object)


def _decode(code: int, length: int, alphabet) -> str:
    r = len(alphabet)
    out = []
    for _ in range(length):
        code, d = divmod(code, r)
        out.append(alphabet[d])
    return "".join(out)


def _canon(s: str, alphabet):
    idx = {c: i for i, c in enumerate(alphabet)}
    return (len(s), tuple(idx[c] for c in s))


class _Checker:
    def __init__(self, M: Afa, member: Callable, max_len: int, nfa: Nfa | None,
                 expected_paths: int | None, bound: tuple | None, chunk: int):
        self.M = M
        self.alphabet = M.alphabet.symbols
        self.r = len(self.alphabet)
        self.member = member
        self.max_len = max_len
        self.nfa = nfa
        self.expected_paths = expected_paths
        self.bound = bound  # (kind, epsilon) for one-sided certification
        self.chunk = chunk
        self.ops = {s: _int_matrix(M.ops[s]) for s in M.alphabet.marked}
        self.ops64 = {s: A.astype(np.int64) for s, A in self.ops.items()}
        self.growth = {s: int(max(sum(abs(x) for x in row) for row in A)) or 1 for s, A in self.ops.items()}
        self.acc = np.array(sorted(M.accept))
        self.result = BatchResult()
        if nfa is not None:
            succ = nfa.successor_lists()
            self.tables = {}
            for s, lists in succ.items():
                width = max(1, max(len(x) for x in lists))
                T = np.full((nfa.n, width), -1, dtype=np.int64)
                for i, x in enumerate(lists):
                    T[i, : len(x)] = x
                self.tables[s] = T
            self.nfa_accept = np.zeros(nfa.n, dtype=bool)
            self.nfa_accept[list(nfa.accept)] = True

    # -- helpers --
    def _step(self, V, sym):
        A = self.ops[sym]
        if V.dtype != object and np.abs(V).max(initial=0) * self.growth[sym] < _LIMIT:
            return V @ self.ops64[sym].T
        return (V.astype(object) @ A.T).astype(object)

    def _runs_step(self, sid, state, sym):
        T = self.tables[sym]
        nxt = T[state]
        keep = nxt >= 0
        reps = keep.sum(axis=1)
        return np.repeat(sid, reps), nxt[keep]

    def _note(self, code, length, reason):
        s = _decode(int(code), length, self.alphabet)
        res = self.result
        if res.witness is None or _canon(s, self.alphabet) < _canon(res.witness, self.alphabet):
            res.witness, res.witness_reason = s, reason

    # -- block processing --
    def check_block(self, V, codes, length, sid, state):
        res = self.result
        F = self._step(V, RIGHT)
        absF = np.abs(F)
        acc = absF[:, self.acc].sum(axis=1)
        tot = absF.sum(axis=1)
        mem = np.asarray(self.member(codes, length), dtype=bool)
        res.rows += len(codes)
        nm = int(mem.sum())
        res.members += nm
        res.non_members += len(codes) - nm
        ones = acc == tot
        zeros = acc == 0
        if self.bound is None:
            bad_m = mem & ~ones
            bad_n = ~mem & ~zeros
        else:
            kind, eps = self.bound
            p, q = eps.numerator, eps.denominator
            acc_o, tot_o = acc.astype(object), tot.astype(object)
            if kind == "positive-one-sided":
                bad_m = mem & (q * acc_o < (q - p) * tot_o).astype(bool)
                bad_n = ~mem & ~zeros
            else:
                bad_m = mem & ~ones
                bad_n = ~mem & (q * acc_o > p * tot_o).astype(bool)
        for mask, why in ((bad_m, "member outside its bound"), (bad_n, "non-member outside its bound")):
            if mask.any():
                i = int(np.flatnonzero(mask)[0])
                self._note(codes[i], length, why)
        self._track(acc[mem], tot[mem], members=True)
        self._track(acc[~mem], tot[~mem], members=False)
        if self.nfa is not None:
            good = self.nfa_accept[state]
            paths = np.bincount(sid[good], minlength=len(codes))
            res.path_counts_seen.update(int(x) for x in np.unique(paths[mem]))
            if self.expected_paths is not None:
                bad = (mem & (paths != self.expected_paths)) | (~mem & (paths != 0))
                if bad.any():
                    res.path_violations += int(bad.sum())
                    i = int(np.flatnonzero(bad)[0])
                    self._note(codes[i], length, f"accepting-path count {int(paths[i])}")

    def _track(self, acc, tot, members):
        if len(acc) == 0:
            return
        ratios = [Fraction(int(a), int(t)) for a, t in zip(*_extremes(acc, tot, members))]
        res = self.result
        if members:
            best = min(ratios)
            res.min_member = best if res.min_member is None else min(res.min_member, best)
        else:
            best = max(ratios)
            res.max_non_member = best if res.max_non_member is None else max(res.max_non_member, best)

    def expand(self, V, codes, length, sid, state):
        self.check_block(V, codes, length, sid, state)
        if length == self.max_len:
            return
        n = len(codes)
        place = self.r ** length
        children = []
        for d, sym in enumerate(self.alphabet):
            cV = self._step(V, sym)
            ccodes = codes + d * place
            if self.nfa is not None:
                csid, cstate = self._runs_step(sid, state, sym)
            else:
                csid = cstate = None
            children.append((cV, ccodes, csid, cstate))
        if n * self.r <= self.chunk:
            V2 = np.concatenate([c[0] for c in children])
            codes2 = np.concatenate([c[1] for c in children])
            if self.nfa is not None:
                sid2 = np.concatenate([c[2] + d * n for d, c in enumerate(children)])
                state2 = np.concatenate([c[3] for c in children])
            else:
                sid2 = state2 = None
            self.expand(V2, codes2, length + 1, sid2, state2)
        else:
            for c in children:
                self.expand(c[0], c[1], length + 1, c[2], c[3])


def _extremes(acc, tot, members):
    # Float ratios only shortlist candidates; the extreme is then picked exactly.
    r = acc.astype(float) / tot.astype(float)
    ext = r.min() if members else r.max()
    near = np.abs(r - ext) <= 1e-9 * max(abs(ext), 1e-300)
    a, t = acc[near], tot[near]
    if a.dtype != object:
        g = np.gcd(a, t)
        a, t = a // g, t // g
        if (a == a[0]).all() and (t == t[0]).all():
            return a[:1], t[:1]
    pairs = sorted({(int(x), int(y)) for x, y in zip(a, t)})
    return [x for x, _ in pairs], [y for _, y in pairs]


def exhaustive_check(M: Afa, member: Callable, max_len: int, *, nfa: Nfa | None = None,
                     expected_paths: int | None = None, mode: str = "zero", epsilon=None,
                     chunk: int = 1 << 15, max_rows: int = 10**9) -> BatchResult:
    """Certify ``M`` on every string up to ``max_len`` against a vectorized membership test.

    ``member(codes, length)`` receives base-``|alphabet|`` string codes (symbol
    at position ``i`` contributes ``index * |alphabet|**i``) and returns a
    boolean array.  ``mode`` is ``"zero"``, ``"positive-one-sided"`` or
    ``"negative-one-sided"`` (the latter two with rational ``epsilon``).
    With ``nfa`` and ``expected_paths`` set, every member must have exactly
    that many accepting runs and every non-member none.
    """
    if not M.regime.is_exact:
        raise ValueError("exhaustive integer checking needs an exact-regime machine")
    if nfa is not None and not nfa.is_normal:
        raise ValueError("NFA must be normalized")
    total = count_strings(len(M.alphabet), max_len)
    if total > max_rows:
        raise EnumerationTooLarge(f"{total} strings exceeds limit {max_rows}")
    bound = None if mode == "zero" else (mode, Fraction(epsilon))
    chk = _Checker(M, member, max_len, nfa, expected_paths, bound, chunk)
    v0 = np.zeros((1, M.n), dtype=np.int64)
    v0[0, M.initial] = 1
    V = chk._step(v0, LEFT)
    codes = np.zeros(1, dtype=np.int64)
    if nfa is not None:
        sid, state = chk._runs_step(np.zeros(1, dtype=np.int64), np.array([nfa.initial]), LEFT)
    else:
        sid = state = None
    chk.expand(V, codes, 0, sid, state)
    return chk.result

"""Machine models and their execution semantics.

Every model reads ``¢ x $``: the left-marker operator first, then the input
symbols left to right, then the right-marker operator.  The empty string
therefore evaluates to ``A_$ A_¢ v_0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import mpmath

from .numerics import (
    EXACT,
    ColVec,
    DimensionError,
    Regime,
    SqMat,
    canon,
    apply,
    first_invalid_column,
    format_scalar,
    is_orthogonal,
    l1_norm,
    validate_stochastic_operator,
)

LEFT = "¢"
RIGHT = "$"
MARKERS = (LEFT, RIGHT)


class AutomatonError(ValueError):
    pass


class AlphabetError(AutomatonError):
    pass


class InvalidOperatorError(AutomatonError):
    def __init__(self, symbol, column, column_sum, regime, what="affine state"):
        self.symbol = symbol
        self.column = column
        self.column_sum = column_sum
        s = format_scalar(column_sum, regime) if column_sum is not None else "?"
        super().__init__(
            f"operator for {symbol!r}: column {column} is not an {what} (column sum {s})"
        )


@dataclass(frozen=True)
class EndMarkedAlphabet:
    symbols: tuple

    def __post_init__(self):
        if not self.symbols:
            raise AlphabetError("alphabet must be nonempty")
        if len(set(self.symbols)) != len(self.symbols):
            raise AlphabetError("alphabet symbols must be distinct")
        for s in self.symbols:
            if not isinstance(s, str) or len(s) != 1:
                raise AlphabetError(f"symbols are single characters, got {s!r}")
            if s in MARKERS:
                raise AlphabetError(f"end-marker {s!r} cannot be an input symbol")

    @classmethod
    def of(cls, symbols) -> "EndMarkedAlphabet":
        if isinstance(symbols, EndMarkedAlphabet):
            return symbols
        return cls(tuple(symbols))

    @property
    def marked(self) -> tuple:
        return (LEFT,) + self.symbols + (RIGHT,)

    def check(self, x: str) -> None:
        for ch in x:
            if ch not in self.symbols:
                raise AlphabetError(f"symbol {ch!r} not in alphabet {''.join(self.symbols)!r}")

    def __iter__(self):
        return iter(self.symbols)

    def __len__(self):
        return len(self.symbols)


def _complete_ops(ops: Mapping, alphabet: EndMarkedAlphabet, n: int, regime: Regime,
                  markers=MARKERS) -> dict:
    out = {}
    for sym, A in ops.items():
        if sym not in alphabet.symbols and sym not in markers:
            raise AlphabetError(f"operator given for unknown symbol {sym!r}")
        if not isinstance(A, SqMat):
            A = SqMat.from_rows(A, regime)
        if A.regime != regime:
            raise AutomatonError(f"operator for {sym!r} is in regime {A.regime}, expected {regime}")
        if A.dim != n:
            raise DimensionError(f"operator for {sym!r} has dim {A.dim}, expected {n}")
        out[sym] = A
    for sym in alphabet.symbols:
        if sym not in out:
            raise AutomatonError(f"missing operator for symbol {sym!r}")
    for m in markers:
        out.setdefault(m, SqMat.identity(n, regime))
    return out


class _Linear:
    """Shared plumbing for models of the form ``A_$ A_x ... A_¢ v_0``."""

    def initial_vector(self) -> ColVec:
        return ColVec.basis(self.n, self.initial, self.regime)

    def pre_final(self, x: str) -> ColVec:
        """State after ``¢`` and ``x``, before ``$``."""
        self.alphabet.check(x)
        v = apply(self.ops[LEFT], self.initial_vector())
        for ch in x:
            v = apply(self.ops[ch], v)
        return v

    def final_state(self, x: str) -> ColVec:
        return apply(self.ops[RIGHT], self.pre_final(x))

    def _check_indices(self):
        if not 0 <= self.initial < self.n:
            raise AutomatonError(f"initial state {self.initial} out of range")
        for i in self.accept:
            if not 0 <= i < self.n:
                raise AutomatonError(f"accept state {i} out of range")


@dataclass(frozen=True)
class Afa(_Linear):
    n: int
    alphabet: EndMarkedAlphabet
    ops: Mapping
    initial: int
    accept: frozenset
    regime: Regime = EXACT
    note: str = field(default="", compare=False)

    kind = "afa"

    def __post_init__(self):
        object.__setattr__(self, "alphabet", EndMarkedAlphabet.of(self.alphabet))
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(self, "ops", _complete_ops(self.ops, self.alphabet, self.n, self.regime))
        self._check_indices()
        if not self.accept:
            raise AutomatonError("accept set must be nonempty")
        self._validate()

    def _validate(self):
        for sym in self.alphabet.marked:
            bad = first_invalid_column(self.ops[sym])
            if bad is not None:
                raise InvalidOperatorError(sym, bad[0], bad[1], self.regime)


@dataclass(frozen=True)
class Pfa(Afa):
    kind = "pfa"

    def _validate(self):
        super()._validate()
        for sym in self.alphabet.marked:
            if not validate_stochastic_operator(self.ops[sym]):
                raise InvalidOperatorError(sym, None, None, self.regime, what="stochastic matrix")


@dataclass(frozen=True)
class Qfa(_Linear):
    """Real-valued measure-once QFA with orthogonal evolution."""

    n: int
    alphabet: EndMarkedAlphabet
    ops: Mapping
    initial: int
    accept: frozenset
    regime: Regime = EXACT
    note: str = field(default="", compare=False)

    kind = "qfa"

    def __post_init__(self):
        object.__setattr__(self, "alphabet", EndMarkedAlphabet.of(self.alphabet))
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(self, "ops", _complete_ops(self.ops, self.alphabet, self.n, self.regime))
        self._check_indices()
        for sym in self.alphabet.marked:
            if not is_orthogonal(self.ops[sym]):
                raise AutomatonError(f"operator for {sym!r} is not orthogonal")


@dataclass(frozen=True)
class Ga(_Linear):
    """Generalized automaton: unrestricted operators, initial vector and weights."""

    n: int
    alphabet: EndMarkedAlphabet
    ops: Mapping
    v0: ColVec
    weights: tuple
    regime: Regime = EXACT
    note: str = field(default="", compare=False)

    kind = "ga"

    def __post_init__(self):
        object.__setattr__(self, "alphabet", EndMarkedAlphabet.of(self.alphabet))
        object.__setattr__(self, "ops", _complete_ops(self.ops, self.alphabet, self.n, self.regime))
        v0 = self.v0 if isinstance(self.v0, ColVec) else ColVec.of(self.v0, self.regime)
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "weights", tuple(self.regime.coerce(w) for w in self.weights))
        if v0.regime != self.regime:
            raise AutomatonError("initial vector regime mismatch")
        if v0.dim != self.n or len(self.weights) != self.n:
            raise DimensionError("initial vector and weights must have dimension n")

    def initial_vector(self) -> ColVec:
        return self.v0


@dataclass(frozen=True)
class Nfa:
    """NFA given by 0/1 matrices; ``delta[σ][j, i] == 1`` iff ``s_i -σ-> s_j``.

    ``delta`` always carries ``¢`` (identity when not given).  ``right`` is the
    optional ``$`` relation and ``epsilon`` the optional ε relation, in the
    same orientation.
    """

    n: int
    alphabet: EndMarkedAlphabet
    delta: Mapping
    initial: int
    accept: frozenset
    right: SqMat | None = None
    epsilon: SqMat | None = None
    note: str = field(default="", compare=False)

    kind = "nfa"
    regime = EXACT

    def __post_init__(self):
        object.__setattr__(self, "alphabet", EndMarkedAlphabet.of(self.alphabet))
        object.__setattr__(self, "accept", frozenset(self.accept))
        object.__setattr__(
            self, "delta", _complete_ops(self.delta, self.alphabet, self.n, EXACT, markers=(LEFT,))
        )
        for name in ("right", "epsilon"):
            M = getattr(self, name)
            if M is not None and not isinstance(M, SqMat):
                object.__setattr__(self, name, SqMat.from_rows(M, EXACT))
        mats = list(self.delta.items())
        if self.right is not None:
            mats.append((RIGHT, self.right))
        if self.epsilon is not None:
            mats.append(("ε", self.epsilon))
        for sym, M in mats:
            if M.dim != self.n:
                raise DimensionError(f"relation for {sym!r} has wrong dimension")
            if any(x not in (0, 1) for r in M.rows for x in r):
                raise AutomatonError(f"relation for {sym!r} has entries outside {{0, 1}}")
        if not 0 <= self.initial < self.n:
            raise AutomatonError(f"initial state {self.initial} out of range")
        if any(not 0 <= i < self.n for i in self.accept):
            raise AutomatonError("accept state out of range")

    @property
    def has_epsilon(self) -> bool:
        return self.epsilon is not None and any(x for r in self.epsilon.rows for x in r)

    @property
    def is_normal(self) -> bool:
        return not self.has_epsilon and self.right is None

    @property
    def ops(self):
        return self.delta

    def successor_lists(self) -> dict:
        """``{symbol: [successors of s_0, successors of s_1, ...]}``, including ``$`` if present."""
        cached = self.__dict__.get("_succ")
        if cached is None:
            rels = dict(self.delta)
            if self.right is not None:
                rels[RIGHT] = self.right
            cached = {
                s: [[j for j in range(self.n) if M.rows[j][i]] for i in range(self.n)]
                for s, M in rels.items()
            }
            object.__setattr__(self, "_succ", cached)
        return cached

    def successors(self, sym: str, i: int) -> list[int]:
        M = self.delta[sym]
        return [j for j in range(self.n) if M.rows[j][i]]


# -- semantics ---------------------------------------------------------------

def weighting(v: ColVec, accept) -> object:
    """Accept-state share of the l1 norm of ``v``."""
    num_terms = [abs(v[i]) for i in sorted(accept)]
    den = l1_norm(v)
    if v.regime.is_exact:
        return canon(sum(num_terms, Fraction(0)) / den)
    with v.regime.workprec():
        return mpmath.fsum(num_terms) / den


def _read_out(M, v: ColVec):
    # Pfa before Afa: a Pfa is an Afa.
    exact = M.regime.is_exact
    if isinstance(M, Pfa):
        terms = [v[i] for i in sorted(M.accept)]
    elif isinstance(M, Afa):
        return weighting(v, M.accept)
    elif isinstance(M, Qfa):
        terms = [v[i] * v[i] for i in sorted(M.accept)]
    elif isinstance(M, Ga):
        if exact:
            return canon(sum((w * a for w, a in zip(M.weights, v)), Fraction(0)))
        with M.regime.workprec():
            return mpmath.fdot(M.weights, v.entries)
    else:
        raise TypeError(f"not an automaton: {type(M).__name__}")
    if exact:
        return canon(sum(terms, Fraction(0)))
    with M.regime.workprec():
        return mpmath.fsum(terms)


def afa_final_state(M: Afa, x: str) -> ColVec:
    return M.final_state(x)


def afa_accept_prob(M: Afa, x: str):
    return weighting(M.final_state(x), M.accept)


def pfa_accept_prob(P: Pfa, x: str):
    """Sum of accept-state probabilities; the weighting is trivial on stochastic vectors."""
    v = P.final_state(x)
    if P.regime.is_exact:
        return sum((v[i] for i in sorted(P.accept)), Fraction(0))
    with P.regime.workprec():
        return mpmath.fsum(v[i] for i in sorted(P.accept))


def qfa_accept_prob(Q: Qfa, x: str):
    return _read_out(Q, Q.final_state(x))


def ga_value(G: Ga, x: str):
    return _read_out(G, G.final_state(x))


def _require_normal(N: Nfa):
    if N.has_epsilon:
        raise AutomatonError("NFA has ε-transitions; run nfa_normalize first")
    if N.right is not None:
        raise AutomatonError("NFA uses the right end-marker; run nfa_normalize first")


def nfa_path_vector(N: Nfa, x: str) -> ColVec:
    """Number of runs on ``¢x`` ending in each state."""
    _require_normal(N)
    N.alphabet.check(x)
    v = apply(N.delta[LEFT], ColVec.basis(N.n, N.initial))
    for ch in x:
        v = apply(N.delta[ch], v)
    return v


def nfa_accepting_paths(N: Nfa, x: str) -> int:
    v = nfa_path_vector(N, x)
    return int(sum(v[i] for i in N.accept))


def nfa_accepts(N: Nfa, x: str) -> bool:
    return nfa_accepting_paths(N, x) > 0


def accept_value(M, x: str):
    """Acceptance probability (or GA value) of ``M`` on ``x``, dispatching on the model."""
    if isinstance(M, Nfa):
        return Fraction(int(nfa_accepts(M, x)))
    return _read_out(M, M.final_state(x))


class Evaluator:
    """Evaluates one machine on many strings, reusing states of shared prefixes.

    Strings are best fed in shortlex order; any order is correct.
    """

    def __init__(self, M, max_cache: int = 2_000_000):
        self.M = M
        self.max_cache = max_cache
        if isinstance(M, Nfa):
            _require_normal(M)
            self._start = apply(M.delta[LEFT], ColVec.basis(M.n, M.initial))
        else:
            self._start = apply(M.ops[LEFT], M.initial_vector())
        self._cache = {"": self._start}

    def pre_final(self, x: str) -> ColVec:
        cache = self._cache
        v = cache.get(x)
        if v is not None:
            return v
        self.M.alphabet.check(x)
        k = len(x) - 1
        while k > 0 and x[:k] not in cache:
            k -= 1
        v = cache[x[:k]]
        ops = self.M.ops
        for i in range(k, len(x)):
            v = apply(ops[x[i]], v)
            if len(cache) < self.max_cache:
                cache[x[: i + 1]] = v
        return v

    def value(self, x: str):
        M = self.M
        v = self.pre_final(x)
        if isinstance(M, Nfa):
            return int(any(v[i] for i in M.accept))
        return _read_out(M, apply(M.ops[RIGHT], v))

    __call__ = value



ERROR_KINDS = ("two-sided", "positive-one-sided", "negative-one-sided", "zero")


@dataclass(frozen=True)
class ErrorMode:
    kind: str
    epsilon: object = Fraction(0)

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise ValueError(f"unknown error mode {self.kind!r}; expected one of {ERROR_KINDS}")
        eps = self.epsilon
        if isinstance(eps, (int, str)):
            eps = Fraction(eps)
            object.__setattr__(self, "epsilon", eps)
        if eps < 0:
            raise ValueError("error bound must be nonnegative")
        half = Fraction(1, 2) if isinstance(eps, Fraction) else 0.5
        if self.kind == "two-sided" and not eps < half:
            raise ValueError("two-sided error bound must be below 1/2")
        if self.kind in ("positive-one-sided", "negative-one-sided") and not eps < 1:
            raise ValueError("one-sided error bound must be below 1")
        if self.kind == "zero" and eps != 0:
            raise ValueError("zero error means epsilon = 0")

    @property
    def is_exact_bound(self) -> bool:
        return isinstance(self.epsilon, Fraction)

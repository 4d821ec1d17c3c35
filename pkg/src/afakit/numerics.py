"""Scalar regimes and small dense linear algebra over them.

Two regimes exist: ``exact`` (unbounded rationals, :class:`fractions.Fraction`)
and ``real`` (:mod:`mpmath` floats at a fixed binary precision).  A vector or
matrix carries its regime; combining values from different regimes raises
:class:`RegimeError` instead of coercing.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

DEFAULT_PRECISION = int(os.environ.get("AFAKIT_PRECISION", "128"))


class NumericsError(ValueError):
    pass


class RegimeError(NumericsError):
    pass


class DimensionError(NumericsError):
    pass


@dataclass(frozen=True)
class Regime:
    kind: str  # "exact" | "real"
    prec: int = 0

    def __post_init__(self):
        if self.kind not in ("exact", "real"):
            raise NumericsError(f"unknown regime {self.kind!r}")
        if self.kind == "real" and self.prec < 53:
            raise NumericsError("real regime needs at least 53 bits of precision")
        if self.kind == "exact" and self.prec != 0:
            raise NumericsError("exact regime has no precision")

    @classmethod
    def real(cls, prec: int | None = None) -> "Regime":
        return cls("real", DEFAULT_PRECISION if prec is None else prec)

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    def tolerance(self, dim: int = 1):
        """Validity tolerance: zero when exact, ``dim * 2**-64`` otherwise."""
        if self.is_exact:
            return Fraction(0)
        with mpmath.workprec(self.prec):
            return mpmath.mpf(dim) * mpmath.mpf(2) ** -64

    def workprec(self):
        return mpmath.workprec(self.prec if not self.is_exact else 53)

    def coerce(self, x):
        """Convert ``x`` to a scalar of this regime.

        Exact accepts ints, Fractions and ``"p/q"`` strings; floats and mpf
        values are refused so that no rounding sneaks in.  Real accepts all of
        those plus decimal strings and mpf values.
        """
        if self.is_exact:
            if isinstance(x, bool):
                x = int(x)
            if isinstance(x, int):
                return x
            if isinstance(x, Fraction):
                return canon(x)
            if isinstance(x, str):
                return canon(Fraction(x.strip()))
            raise RegimeError(f"cannot use {type(x).__name__} value {x!r} in exact regime")
        with mpmath.workprec(self.prec):
            if isinstance(x, Fraction):
                return mpmath.mpf(x.numerator) / mpmath.mpf(x.denominator)
            if isinstance(x, str) and "/" in x:
                f = Fraction(x.strip())
                return mpmath.mpf(f.numerator) / mpmath.mpf(f.denominator)
            if isinstance(x, mpmath.mpf):
                return +x
            return mpmath.mpf(x)

    def __str__(self):
        return "exact" if self.is_exact else f"real/{self.prec}"


EXACT = Regime("exact")


def canon(x):
    """Exact scalars are plain ints when integral, otherwise reduced Fractions."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def _same_regime(*regimes: Regime) -> Regime:
    first = regimes[0]
    for r in regimes[1:]:
        if r != first:
            raise RegimeError(f"regime mismatch: {first} vs {r}")
    return first


def _lcm_den(values: Iterable[Fraction]) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, v.denominator)
    return d


@dataclass(frozen=True)
class ColVec:
    entries: tuple
    regime: Regime = EXACT

    def __post_init__(self):
        if not self.entries:
            raise DimensionError("vector must have positive dimension")

    @classmethod
    def of(cls, values: Iterable, regime: Regime = EXACT) -> "ColVec":
        return cls(tuple(regime.coerce(v) for v in values), regime)

    @classmethod
    def basis(cls, dim: int, index: int, regime: Regime = EXACT) -> "ColVec":
        if not 0 <= index < dim:
            raise DimensionError(f"basis index {index} out of range for dim {dim}")
        return cls.of([1 if i == index else 0 for i in range(dim)], regime)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def extended(self, *values) -> "ColVec":
        return ColVec(self.entries + tuple(self.regime.coerce(v) for v in values), self.regime)


@dataclass(frozen=True)
class SqMat:
    """Square matrix stored by rows; column ``j`` is the image of basis state ``j``."""

    rows: tuple
    regime: Regime = EXACT
    _scaled: tuple | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.rows)
        if n == 0:
            raise DimensionError("matrix must have positive dimension")
        if any(len(r) != n for r in self.rows):
            raise DimensionError("matrix is not square")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], regime: Regime = EXACT) -> "SqMat":
        return cls(tuple(tuple(regime.coerce(x) for x in r) for r in rows), regime)

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence], regime: Regime = EXACT) -> "SqMat":
        n = len(cols)
        if any(len(c) != n for c in cols):
            raise DimensionError("matrix is not square")
        return cls.from_rows([[cols[j][i] for j in range(n)] for i in range(n)], regime)

    @classmethod
    def identity(cls, dim: int, regime: Regime = EXACT) -> "SqMat":
        return cls.from_rows([[1 if i == j else 0 for j in range(dim)] for i in range(dim)], regime)

    @property
    def dim(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def col(self, j: int) -> ColVec:
        return ColVec(tuple(r[j] for r in self.rows), self.regime)

    def columns(self) -> list[ColVec]:
        return [self.col(j) for j in range(self.dim)]

    def transpose(self) -> "SqMat":
        return SqMat(tuple(zip(*self.rows)), self.regime)

    def integer_form(self) -> tuple[int, tuple]:
        """Return ``(d, B)`` with integer rows ``B`` such that ``self == B / d``."""
        if not self.regime.is_exact:
            raise RegimeError("integer form only exists in the exact regime")
        if self._scaled is None:
            d = _lcm_den(x for r in self.rows for x in r)
            scaled = tuple(tuple(x.numerator * (d // x.denominator) for x in r) for r in self.rows)
            object.__setattr__(self, "_scaled", (d, scaled))
        return self._scaled


def zeta(v: ColVec):
    """Sum of all entries."""
    if v.regime.is_exact:
        return canon(sum(v.entries, Fraction(0)))
    with v.regime.workprec():
        return mpmath.fsum(v.entries)


def l1_norm(v: ColVec):
    if v.regime.is_exact:
        return canon(sum((abs(x) for x in v.entries), Fraction(0)))
    with v.regime.workprec():
        return mpmath.fsum(v.entries, absolute=True)


def _close_to_one(s, regime: Regime, dim: int) -> bool:
    if regime.is_exact:
        return s == 1
    with regime.workprec():
        return abs(s - 1) <= regime.tolerance(dim)


def validate_affine_state(v: ColVec) -> bool:
    return _close_to_one(zeta(v), v.regime, v.dim)


def first_invalid_column(A: SqMat):
    """Return ``(j, column_sum)`` for the first column that is not an affine state."""
    for j in range(A.dim):
        c = A.col(j)
        s = zeta(c)
        if not _close_to_one(s, A.regime, A.dim):
            return j, s
    return None


def validate_affine_operator(A: SqMat) -> bool:
    return first_invalid_column(A) is None


def validate_stochastic_operator(A: SqMat) -> bool:
    if not validate_affine_operator(A):
        return False
    if A.regime.is_exact:
        return all(x >= 0 for r in A.rows for x in r)
    tol = A.regime.tolerance(A.dim)
    return all(x >= -tol for r in A.rows for x in r)


def is_orthogonal(A: SqMat) -> bool:
    """True iff ``A^T A`` is the identity (within tolerance in the real regime)."""
    P = matmul(A.transpose(), A)
    tol = A.regime.tolerance(A.dim)
    with A.regime.workprec():
        for i in range(A.dim):
            for j in range(A.dim):
                target = 1 if i == j else 0
                if abs(P[i, j] - target) > tol:
                    return False
    return True


def apply(A: SqMat, v: ColVec) -> ColVec:
    """Matrix-vector product ``A v``."""
    regime = _same_regime(A.regime, v.regime)
    if A.dim != v.dim:
        raise DimensionError(f"cannot apply {A.dim}x{A.dim} matrix to {v.dim}-vector")
    if regime.is_exact:
        da, B = A.integer_form()
        dv = _lcm_den(v.entries)
        nv = [x.numerator * (dv // x.denominator) for x in v.entries]
        den = da * dv
        out = []
        for row in B:
            s = 0
            for a, b in zip(row, nv):
                if a and b:
                    s += a * b
            out.append(s if den == 1 else canon(Fraction(s, den)))
        return ColVec(tuple(out), regime)
    with regime.workprec():
        return ColVec(tuple(mpmath.fdot(row, v.entries) for row in A.rows), regime)


def matmul(A: SqMat, B: SqMat) -> SqMat:
    regime = _same_regime(A.regime, B.regime)
    if A.dim != B.dim:
        raise DimensionError("dimension mismatch")
    cols = B.transpose().rows
    if regime.is_exact:
        rows = tuple(tuple(canon(sum((a * b for a, b in zip(r, c)), Fraction(0))) for c in cols)
                     for r in A.rows)
    else:
        with regime.workprec():
            rows = tuple(tuple(mpmath.fdot(r, c) for c in cols) for r in A.rows)
    return SqMat(rows, regime)


def kron(A: SqMat, B: SqMat) -> SqMat:
    """Kronecker product; basis index ``(i, j)`` maps to ``i * B.dim + j``."""
    regime = _same_regime(A.regime, B.regime)
    n, m = A.dim, B.dim
    with regime.workprec():
        rows = tuple(
            tuple(canon(A.rows[i // m][j // m] * B.rows[i % m][j % m]) for j in range(n * m))
            for i in range(n * m)
        )
    return SqMat(rows, regime)


def kron_vec(u: ColVec, w: ColVec) -> ColVec:
    regime = _same_regime(u.regime, w.regime)
    with regime.workprec():
        return ColVec(tuple(canon(a * b) for a in u.entries for b in w.entries), regime)


# -- serialization -----------------------------------------------------------

def format_scalar(x, regime: Regime) -> str:
    """Serialize: ``"p/q"`` (or ``"p"``) for rationals, round-trip decimal for reals."""
    if regime.is_exact:
        return str(x)
    with regime.workprec():
        dps = mpmath.libmp.libmpf.repr_dps(regime.prec)
        return mpmath.libmp.to_str(x._mpf_, dps)


def parse_scalar(text: str, regime: Regime):
    text = text.strip()
    if not text:
        raise NumericsError("empty scalar")
    try:
        return regime.coerce(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise NumericsError(f"bad scalar {text!r} for {regime} regime") from exc


def to_fraction(x) -> Fraction:
    """Exact binary value of an mpf (or a Fraction passed through)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    man, exp = x.man_exp
    man = int(man)
    return Fraction(man * 2**exp) if exp >= 0 else Fraction(man, 2 ** (-exp))


def format_fixed(x, places: int = 30) -> str:
    """Fixed-width decimal rendering, deterministic across platforms."""
    f = to_fraction(x)
    q = round(f * 10**places)
    sign = "-" if q < 0 else ""
    q = abs(q)
    whole, frac = divmod(q, 10**places)
    return f"{sign}{whole}.{frac:0{places}d}"


def to_float(x) -> float:
    return float(x)

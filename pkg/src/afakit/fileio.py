"""Line-oriented text format for automata.

Example::

    # afakit automaton
    # construction: COUNT_m with m=2, t=1
    afakit-automaton 1
    kind afa
    regime exact
    states 3
    alphabet a
    initial 0
    accept 0
    note COUNT_m with m=2, t=1
    matrix ¢
      col 1 2 -2
      col 0 1 0
      col 0 0 1
    ...
    end

Matrices are listed column by column, so each ``col`` line is the image of
one basis state (an affine state for AfA operators).  Real-regime files say
``regime real <bits>`` and write scalars as round-trip decimal strings.
NFA files may carry ``matrix ε`` and ``matrix $``; GA files carry ``vector``
and ``weights`` lines instead of ``initial``/``accept``.
"""
from __future__ import annotations

from pathlib import Path

from .automata import (
    LEFT,
    RIGHT,
    Afa,
    AutomatonError,
    Ga,
    Nfa,
    Pfa,
    Qfa,
)
from .numerics import EXACT, ColVec, NumericsError, Regime, SqMat, format_scalar, parse_scalar

VERSION = 1
EPS_KEY = "ε"
KINDS = {"afa": Afa, "pfa": Pfa, "qfa": Qfa, "ga": Ga, "nfa": Nfa}


class FormatError(ValueError):
    def __init__(self, msg, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


def _regime_line(r: Regime) -> str:
    return "regime exact" if r.is_exact else f"regime real {r.prec}"


def _matrix_lines(sym: str, A: SqMat) -> list[str]:
    out = [f"matrix {sym}"]
    for j in range(A.dim):
        out.append("  col " + " ".join(format_scalar(A.rows[i][j], A.regime) for i in range(A.dim)))
    return out


def dumps(M) -> str:
    lines = ["# afakit automaton"]
    if M.note:
        lines.append(f"# construction: {M.note}")
    lines += [f"afakit-automaton {VERSION}", f"kind {M.kind}", _regime_line(M.regime),
              f"states {M.n}", "alphabet " + " ".join(M.alphabet.symbols)]
    if isinstance(M, Ga):
        lines.append("vector " + " ".join(format_scalar(x, M.regime) for x in M.v0))
        lines.append("weights " + " ".join(format_scalar(x, M.regime) for x in M.weights))
    else:
        lines.append(f"initial {M.initial}")
        lines.append("accept " + " ".join(str(i) for i in sorted(M.accept)))
    if M.note:
        lines.append(f"note {M.note}")
    if isinstance(M, Nfa):
        for sym in (LEFT,) + M.alphabet.symbols:
            lines += _matrix_lines(sym, M.delta[sym])
        if M.right is not None:
            lines += _matrix_lines(RIGHT, M.right)
        if M.epsilon is not None:
            lines += _matrix_lines(EPS_KEY, M.epsilon)
    else:
        for sym in M.alphabet.marked:
            lines += _matrix_lines(sym, M.ops[sym])
    lines.append("end")
    return "\n".join(lines) + "\n"


def loads(text: str):
    header = {}
    mats: dict[str, list] = {}
    current = None
    seen_end = False
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if seen_end:
            raise FormatError("content after 'end'", no)
        key, _, rest = line.partition(" ")
        if key == "end":
            seen_end = True
        elif key == "matrix":
            sym = rest.strip()
            if not sym or sym in mats:
                raise FormatError(f"bad or duplicate matrix name {sym!r}", no)
            current = sym
            mats[sym] = []
        elif key == "col":
            if current is None:
                raise FormatError("'col' outside a matrix", no)
            mats[current].append((no, rest.split()))
        elif key in header:
            raise FormatError(f"duplicate key {key!r}", no)
        else:
            header[key] = (no, rest)
    if not seen_end:
        raise FormatError("missing 'end'")
    return _build(header, mats)


def _get(header, key, required=True):
    if key not in header:
        if required:
            raise FormatError(f"missing {key!r}")
        return None, None
    return header[key]


def _build(header, mats):
    no, ver = _get(header, "afakit-automaton")
    if ver.strip() != str(VERSION):
        raise FormatError(f"unsupported format version {ver.strip()!r}", no)
    no, kind = _get(header, "kind")
    kind = kind.strip()
    if kind not in KINDS:
        raise FormatError(f"unknown kind {kind!r}", no)
    no, reg = _get(header, "regime")
    parts = reg.split()
    try:
        if parts == ["exact"]:
            regime = EXACT
        elif len(parts) == 2 and parts[0] == "real":
            regime = Regime.real(int(parts[1]))
        else:
            raise ValueError(reg)
    except (ValueError, NumericsError) as exc:
        raise FormatError(f"bad regime {reg!r}", no) from exc
    no, states = _get(header, "states")
    try:
        n = int(states)
    except ValueError as exc:
        raise FormatError(f"bad state count {states!r}", no) from exc
    if n < 1:
        raise FormatError("state count must be positive", no)
    _, alpha = _get(header, "alphabet")
    alphabet = tuple(alpha.split())
    note = header.get("note", (None, ""))[1].strip()

    def scalar(tok, line):
        try:
            return parse_scalar(tok, regime)
        except NumericsError as exc:
            raise FormatError(str(exc), line) from exc

    ops = {}
    for sym, cols in mats.items():
        if len(cols) != n:
            raise FormatError(f"matrix {sym!r} has {len(cols)} columns, expected {n}",
                              cols[-1][0] if cols else None)
        table = []
        for line, toks in cols:
            if len(toks) != n:
                raise FormatError(f"matrix {sym!r}: column has {len(toks)} entries, expected {n}", line)
            table.append([scalar(t, line) for t in toks])
        ops[sym] = SqMat.from_columns(table, regime)

    try:
        if kind == "ga":
            no, vec = _get(header, "vector")
            v0 = ColVec.of([scalar(t, no) for t in vec.split()], regime)
            no, ws = _get(header, "weights")
            weights = [scalar(t, no) for t in ws.split()]
            return Ga(n, alphabet, ops, v0, weights, regime, note=note)
        no, ini = _get(header, "initial")
        try:
            initial = int(ini)
            _, acc = _get(header, "accept", required=False)
            accept = {int(t) for t in (acc or "").split()}
        except ValueError as exc:
            raise FormatError("bad state index", no) from exc
        if kind == "nfa":
            if not regime.is_exact:
                raise FormatError("NFA files are exact")
            right = ops.pop(RIGHT, None)
            eps = ops.pop(EPS_KEY, None)
            return Nfa(n, alphabet, ops, initial, accept, right=right, epsilon=eps, note=note)
        return KINDS[kind](n, alphabet, ops, initial, accept, regime, note=note)
    except (AutomatonError, NumericsError) as exc:
        raise FormatError(str(exc)) from exc


def load(path) -> object:
    return loads(Path(path).read_text(encoding="utf-8"))


def dump(M, path) -> None:
    Path(path).write_text(dumps(M), encoding="utf-8")

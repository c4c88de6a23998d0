"""Two-level formula ASTs, concrete syntax, parser, printer and desugaring.

Static formulas are evaluated at a single state, epistemic formulas at a
world (a distribution over states).  The concrete syntax is ASCII:

    P[0.5,1] psi(x)            probability quantification
    P{1/5} psi_L(x)            singleton interval
    h_L(x) |> P[0,0.1] psi(x)  supposing operator (condition on a static formula)
    K<a> phi, Pos<a> phi       knowledge / possibility over relation ``a``
    CK<a> phi, CP<a> phi       counterfactual knowledge / possibility
    Xi<d>, Q<d> psi            dataset-world hooks used by the fairness formulas

Binding strength, tightest first: prefix operators (``!``, ``P``, modalities),
``&``, ``|``, ``->`` (right-assoc), ``|>`` (right-assoc, static left operand).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int = 0):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.column = col


class IntervalError(ValueError):
    pass


# --------------------------------------------------------------------------
# Interval sets
# --------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Piece:
    lower: Fraction
    lower_closed: bool
    upper: Fraction
    upper_closed: bool

    def contains(self, p: Fraction) -> bool:
        if p < self.lower or (p == self.lower and not self.lower_closed):
            return False
        if p > self.upper or (p == self.upper and not self.upper_closed):
            return False
        return True


def _overlap(a: Piece, b: Piece) -> bool:
    # a sorted before b
    if a.upper > b.lower:
        return True
    return a.upper == b.lower and a.upper_closed and b.lower_closed


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of pairwise disjoint subintervals of [0, 1]."""

    pieces: tuple[Piece, ...]

    def __post_init__(self):
        if not self.pieces:
            raise IntervalError("interval set must have at least one piece")
        for p in self.pieces:
            if not (0 <= p.lower <= 1 and 0 <= p.upper <= 1):
                raise IntervalError(f"probability bound outside [0,1]: {p}")
            if p.lower > p.upper:
                raise IntervalError(f"malformed interval: lower {p.lower} > upper {p.upper}")
            if p.lower == p.upper and not (p.lower_closed and p.upper_closed):
                raise IntervalError(f"empty interval at {p.lower}")
        ordered = tuple(sorted(self.pieces, key=lambda p: (p.lower, not p.lower_closed)))
        for a, b in zip(ordered, ordered[1:]):
            if _overlap(a, b):
                raise IntervalError("non-disjoint interval union")
        object.__setattr__(self, "pieces", ordered)

    @classmethod
    def closed(cls, lower, upper) -> IntervalSet:
        return cls((Piece(Fraction(lower), True, Fraction(upper), True),))

    @classmethod
    def point(cls, value) -> IntervalSet:
        v = Fraction(value)
        return cls((Piece(v, True, v, True),))

    def contains(self, p) -> bool:
        return interval_contains(self, p)

    def __str__(self) -> str:
        if len(self.pieces) == 1 and self.pieces[0].lower == self.pieces[0].upper:
            return "{" + format_number(self.pieces[0].lower) + "}"
        return "u".join(
            ("[" if p.lower_closed else "(")
            + format_number(p.lower)
            + ","
            + format_number(p.upper)
            + ("]" if p.upper_closed else ")")
            for p in self.pieces
        )


def interval_contains(interval: IntervalSet, p) -> bool:
    p = Fraction(p)
    return any(piece.contains(p) for piece in interval.pieces)


def format_number(q: Fraction) -> str:
    """Print a rational as a terminating decimal when possible, else ``p/q``."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    digits = max(twos, fives)
    scaled = q * 10**digits
    assert scaled.denominator == 1
    sign = "-" if scaled < 0 else ""
    s = str(abs(scaled.numerator)).rjust(digits + 1, "0")
    return f"{sign}{s[:-digits]}.{s[-digits:]}"


def parse_number(text: str) -> Fraction:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        if int(den) == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(text)


# --------------------------------------------------------------------------
# ASTs
# --------------------------------------------------------------------------


class StaticFormula:
    """Proposition evaluated at a state."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Atom(StaticFormula):
    pred: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class SNot(StaticFormula):
    operand: StaticFormula


@dataclass(frozen=True)
class SAnd(StaticFormula):
    left: StaticFormula
    right: StaticFormula


@dataclass(frozen=True)
class SOr(StaticFormula):
    left: StaticFormula
    right: StaticFormula


class EpistemicFormula:
    """Proposition evaluated at a world."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Prob(EpistemicFormula):
    interval: IntervalSet
    body: StaticFormula


@dataclass(frozen=True)
class Not(EpistemicFormula):
    operand: EpistemicFormula


@dataclass(frozen=True)
class And(EpistemicFormula):
    left: EpistemicFormula
    right: EpistemicFormula


@dataclass(frozen=True)
class Or(EpistemicFormula):
    left: EpistemicFormula
    right: EpistemicFormula


@dataclass(frozen=True)
class Implies(EpistemicFormula):
    left: EpistemicFormula
    right: EpistemicFormula


@dataclass(frozen=True)
class Suppose(EpistemicFormula):
    condition: StaticFormula
    body: EpistemicFormula


@dataclass(frozen=True)
class Know(EpistemicFormula):
    relation: str
    body: EpistemicFormula


@dataclass(frozen=True)
class Possible(EpistemicFormula):
    relation: str
    body: EpistemicFormula


@dataclass(frozen=True)
class CounterKnow(EpistemicFormula):
    relation: str
    body: EpistemicFormula


@dataclass(frozen=True)
class CounterPossible(EpistemicFormula):
    relation: str
    body: EpistemicFormula


@dataclass(frozen=True)
class Xi(EpistemicFormula):
    """Holds at worlds that are the dataset world conditioned on a set of states."""

    dataset: str


@dataclass(frozen=True)
class Q(EpistemicFormula):
    """Holds at w iff w gives ``body`` mass 1 and drops no ``body``-state of ``ref``."""

    ref: str
    body: StaticFormula


Formula = Union[StaticFormula, EpistemicFormula]

_MODAL_KEYWORDS = {"K": Know, "Pos": Possible, "CK": CounterKnow, "CP": CounterPossible}
_MODAL_NAMES = {v: k for k, v in _MODAL_KEYWORDS.items()}
RESERVED = frozenset({"P", "Xi", "Q", *_MODAL_KEYWORDS})

# convenience constructors


def atom(pred: str, *args: str) -> Atom:
    return Atom(pred, tuple(args))


def iff_static(a: StaticFormula, b: StaticFormula) -> StaticFormula:
    """Biconditional expanded into core static connectives."""
    return SNot(SAnd(SNot(SAnd(a, b)), SNot(SAnd(SNot(a), SNot(b)))))


def conj(*parts):
    out = parts[0]
    for p in parts[1:]:
        out = SAnd(out, p) if isinstance(out, StaticFormula) else And(out, p)
    return out


# --------------------------------------------------------------------------
# Desugaring
# --------------------------------------------------------------------------


def desugar_static(f: StaticFormula) -> StaticFormula:
    if isinstance(f, Atom):
        return f
    if isinstance(f, SNot):
        return SNot(desugar_static(f.operand))
    if isinstance(f, SAnd):
        return SAnd(desugar_static(f.left), desugar_static(f.right))
    if isinstance(f, SOr):
        return SNot(SAnd(SNot(desugar_static(f.left)), SNot(desugar_static(f.right))))
    raise TypeError(f"not a static formula: {f!r}")


def desugar(f: EpistemicFormula) -> EpistemicFormula:
    """Rewrite Or, Implies, Pos and CP into Prob/Not/And/Suppose/K/CK."""
    if isinstance(f, Prob):
        return Prob(f.interval, desugar_static(f.body))
    if isinstance(f, Not):
        return Not(desugar(f.operand))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Not(And(Not(desugar(f.left)), Not(desugar(f.right))))
    if isinstance(f, Implies):
        # phi0 -> phi1  ==  !phi0 | phi1  ==  !(!!phi0 & !phi1)
        return Not(And(Not(Not(desugar(f.left))), Not(desugar(f.right))))
    if isinstance(f, Suppose):
        return Suppose(desugar_static(f.condition), desugar(f.body))
    if isinstance(f, Know):
        return Know(f.relation, desugar(f.body))
    if isinstance(f, CounterKnow):
        return CounterKnow(f.relation, desugar(f.body))
    if isinstance(f, Possible):
        return Not(Know(f.relation, Not(desugar(f.body))))
    if isinstance(f, CounterPossible):
        return Not(CounterKnow(f.relation, Not(desugar(f.body))))
    if isinstance(f, Xi):
        return f
    if isinstance(f, Q):
        return Q(f.ref, desugar_static(f.body))
    raise TypeError(f"not an epistemic formula: {f!r}")


def is_core(f: Formula) -> bool:
    if isinstance(f, (SOr, Or, Implies, Possible, CounterPossible)):
        return False
    if isinstance(f, Atom):
        return True
    if isinstance(f, (SNot, Not)):
        return is_core(f.operand)
    if isinstance(f, (SAnd, And)):
        return is_core(f.left) and is_core(f.right)
    if isinstance(f, Prob):
        return is_core(f.body)
    if isinstance(f, Suppose):
        return is_core(f.condition) and is_core(f.body)
    if isinstance(f, (Know, CounterKnow)):
        return is_core(f.body)
    if isinstance(f, Q):
        return is_core(f.body)
    return isinstance(f, Xi)


def predicates(f: Formula) -> set[tuple[str, int]]:
    """All (predicate, arity) pairs occurring in ``f``."""
    out: set[tuple[str, int]] = set()

    def walk(g):
        if isinstance(g, Atom):
            out.add((g.pred, len(g.args)))
        elif isinstance(g, (SNot, Not)):
            walk(g.operand)
        elif isinstance(g, (SAnd, SOr, And, Or, Implies)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Prob):
            walk(g.body)
        elif isinstance(g, Suppose):
            walk(g.condition)
            walk(g.body)
        elif isinstance(g, (Know, Possible, CounterKnow, CounterPossible)):
            walk(g.body)
        elif isinstance(g, Q):
            walk(g.body)

    walk(f)
    return out


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

# larger binds tighter
_PREC_SUPPOSE, _PREC_IMPLIES, _PREC_OR, _PREC_AND, _PREC_PREFIX = 1, 2, 3, 4, 5


def _prec(f: Formula) -> int:
    if isinstance(f, Suppose):
        return _PREC_SUPPOSE
    if isinstance(f, Implies):
        return _PREC_IMPLIES
    if isinstance(f, (Or, SOr)):
        return _PREC_OR
    if isinstance(f, (And, SAnd)):
        return _PREC_AND
    return _PREC_PREFIX


def _wrap(f: Formula, need: bool) -> str:
    s = to_text(f)
    return f"({s})" if need else s


def to_text(f: Formula) -> str:
    """Render ``f`` in the concrete syntax with minimal parentheses."""
    if isinstance(f, Atom):
        return f"{f.pred}({','.join(f.args)})"
    if isinstance(f, (SNot, Not)):
        return "!" + _wrap(f.operand, _prec(f.operand) < _PREC_PREFIX)
    if isinstance(f, (SAnd, And, SOr, Or)):
        op = " & " if isinstance(f, (SAnd, And)) else " | "
        p = _prec(f)
        return _wrap(f.left, _prec(f.left) < p) + op + _wrap(f.right, _prec(f.right) <= p)
    if isinstance(f, Implies):
        return (
            _wrap(f.left, _prec(f.left) <= _PREC_IMPLIES)
            + " -> "
            + _wrap(f.right, _prec(f.right) < _PREC_IMPLIES)
        )
    if isinstance(f, Suppose):
        return _wrap(f.condition, False) + " |> " + to_text(f.body)
    if isinstance(f, Prob):
        return f"P{f.interval} " + _wrap(f.body, _prec(f.body) < _PREC_PREFIX)
    if isinstance(f, (Know, Possible, CounterKnow, CounterPossible)):
        kw = _MODAL_NAMES[type(f)]
        return f"{kw}<{f.relation}> " + _wrap(f.body, _prec(f.body) < _PREC_PREFIX)
    if isinstance(f, Xi):
        return f"Xi<{f.dataset}>"
    if isinstance(f, Q):
        return f"Q<{f.ref}> " + _wrap(f.body, _prec(f.body) < _PREC_PREFIX)
    raise TypeError(f"cannot print {f!r}")


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+/\d+|\d+\.\d*|\.\d+|\d+)
  | (?P<angle><[^<>\s]+>)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|>|->|[!&|(),\[\]{}])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


# Intermediate parse tree: the same AST classes, but boolean connectives over
# static operands are produced as S* nodes only after classification.


@dataclass(frozen=True)
class _Bin:
    op: str
    left: object
    right: object
    pos: int


@dataclass(frozen=True)
class _Neg:
    operand: object
    pos: int


@dataclass(frozen=True)
class _Pre:
    """Prefix operator node (P, modal, Q) holding an unclassified operand."""

    make: object
    operand: object
    static_operand: bool
    pos: int


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, offset: int = 0) -> _Tok:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        return FormulaSyntaxError(msg, self.text, tok.pos)

    def expect(self, value: str) -> _Tok:
        tok = self.next()
        if tok.value != value:
            got = tok.value or "end of input"
            raise FormulaSyntaxError(f"expected {value!r}, got {got!r}", self.text, tok.pos)
        return tok

    # grammar levels -------------------------------------------------------

    def parse(self):
        tree = self.suppose()
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().value!r}")
        return tree

    def suppose(self):
        left = self.implies()
        tok = self.peek()
        if tok.value == "|>":
            self.next()
            return _Bin("|>", left, self.suppose(), tok.pos)
        return left

    def implies(self):
        left = self.disj()
        tok = self.peek()
        if tok.value == "->":
            self.next()
            return _Bin("->", left, self.implies(), tok.pos)
        return left

    def disj(self):
        left = self.conj()
        while self.peek().value == "|":
            tok = self.next()
            left = _Bin("|", left, self.conj(), tok.pos)
        return left

    def conj(self):
        left = self.unary()
        while self.peek().value == "&":
            tok = self.next()
            left = _Bin("&", left, self.unary(), tok.pos)
        return left

    def unary(self):
        tok = self.peek()
        if tok.value == "!":
            self.next()
            return _Neg(self.unary(), tok.pos)
        if tok.value == "(":
            self.next()
            inner = self.suppose()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            if tok.value == "P" and self.peek(1).value in ("[", "(", "{"):
                self.next()
                interval = self.iset()
                return _Pre(lambda body, iv=interval: Prob(iv, body), self.unary(), True, tok.pos)
            if tok.value in _MODAL_KEYWORDS and self.peek(1).kind == "angle":
                self.next()
                rel = self.next().value[1:-1]
                cls = _MODAL_KEYWORDS[tok.value]
                return _Pre(lambda body, c=cls, r=rel: c(r, body), self.unary(), False, tok.pos)
            if tok.value == "Xi" and self.peek(1).kind == "angle":
                self.next()
                return Xi(self.next().value[1:-1])
            if tok.value == "Q" and self.peek(1).kind == "angle":
                self.next()
                ref = self.next().value[1:-1]
                return _Pre(lambda body, r=ref: Q(r, body), self.unary(), True, tok.pos)
            return self.atom()
        got = tok.value or "end of input"
        raise self.error(f"unexpected {got!r}")

    def atom(self) -> Atom:
        name = self.next()
        if name.value in RESERVED:
            raise FormulaSyntaxError(f"reserved word {name.value!r} used as predicate", self.text, name.pos)
        self.expect("(")
        args = []
        tok = self.next()
        if tok.kind != "ident":
            raise FormulaSyntaxError("expected variable name", self.text, tok.pos)
        args.append(tok.value)
        while self.peek().value == ",":
            self.next()
            tok = self.next()
            if tok.kind != "ident":
                raise FormulaSyntaxError("expected variable name", self.text, tok.pos)
            args.append(tok.value)
        self.expect(")")
        return Atom(name.value, tuple(args))

    def number(self) -> Fraction:
        tok = self.next()
        if tok.kind != "num":
            raise FormulaSyntaxError("expected a number", self.text, tok.pos)
        try:
            value = parse_number(tok.value)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormulaSyntaxError(str(exc), self.text, tok.pos) from None
        if not 0 <= value <= 1:
            raise FormulaSyntaxError(f"probability literal {tok.value} outside [0,1]", self.text, tok.pos)
        return value

    def iset(self) -> IntervalSet:
        start = self.peek()
        if start.value == "{":
            self.next()
            v = self.number()
            self.expect("}")
            return IntervalSet.point(v)
        pieces = [self.piece()]
        while (
            self.peek().value == "u"
            and self.peek(1).value in ("[", "(")
            and self.peek(2).kind == "num"
        ):
            self.next()
            pieces.append(self.piece())
        try:
            return IntervalSet(tuple(pieces))
        except IntervalError as exc:
            raise FormulaSyntaxError(str(exc), self.text, start.pos) from None

    def piece(self) -> Piece:
        open_tok = self.next()
        if open_tok.value not in ("[", "("):
            raise FormulaSyntaxError("expected '[' or '('", self.text, open_tok.pos)
        lo = self.number()
        self.expect(",")
        hi = self.number()
        close = self.next()
        if close.value not in ("]", ")"):
            raise FormulaSyntaxError("expected ']' or ')'", self.text, close.pos)
        if lo > hi:
            raise FormulaSyntaxError(f"malformed interval: lower {lo} > upper {hi}", self.text, open_tok.pos)
        return Piece(lo, open_tok.value == "[", hi, close.value == "]")


def _is_static(node) -> bool:
    if isinstance(node, Atom):
        return True
    if isinstance(node, _Neg):
        return _is_static(node.operand)
    if isinstance(node, _Bin) and node.op in ("&", "|"):
        return _is_static(node.left) and _is_static(node.right)
    return False


def _pos_of(node) -> int:
    return getattr(node, "pos", 0)


def _to_static(node, text: str) -> StaticFormula:
    if isinstance(node, Atom):
        return node
    if isinstance(node, _Neg):
        return SNot(_to_static(node.operand, text))
    if isinstance(node, _Bin) and node.op in ("&", "|"):
        cls = SAnd if node.op == "&" else SOr
        return cls(_to_static(node.left, text), _to_static(node.right, text))
    raise FormulaSyntaxError("epistemic operator in static position", text, _pos_of(node))


def _to_epistemic(node, text: str) -> EpistemicFormula:
    if isinstance(node, (Xi,)):
        return node
    if isinstance(node, Atom):
        raise FormulaSyntaxError(
            f"static formula {to_text(node)} in epistemic position (quantify it with P)",
            text,
            0,
        )
    if isinstance(node, _Neg):
        if _is_static(node):
            raise FormulaSyntaxError("static formula in epistemic position", text, node.pos)
        return Not(_to_epistemic(node.operand, text))
    if isinstance(node, _Pre):
        if node.static_operand:
            return node.make(_to_static(node.operand, text))
        return node.make(_to_epistemic(node.operand, text))
    if isinstance(node, _Bin):
        if node.op == "|>":
            return Suppose(_to_static(node.left, text), _to_epistemic(node.right, text))
        if _is_static(node):
            raise FormulaSyntaxError("static formula in epistemic position", text, node.pos)
        left = _to_epistemic(node.left, text)
        right = _to_epistemic(node.right, text)
        return {"&": And, "|": Or, "->": Implies}[node.op](left, right)
    raise FormulaSyntaxError("cannot classify formula", text, _pos_of(node))


def parse_epistemic(text: str) -> EpistemicFormula:
    """Parse an epistemic formula; raises :class:`FormulaSyntaxError`."""
    return _to_epistemic(_Parser(text).parse(), text)


def parse_static(text: str) -> StaticFormula:
    """Parse a static formula; raises :class:`FormulaSyntaxError`."""
    return _to_static(_Parser(text).parse(), text)


def parse_interval(text: str) -> IntervalSet:
    p = _Parser(text)
    iv = p.iset()
    if p.peek().kind != "eof":
        raise p.error(f"unexpected {p.peek().value!r}")
    return iv

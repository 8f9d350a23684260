"""Recursive-descent parser for the coordinate expression language.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' integer)?
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
    func   := sin | cos | exp | ln | sqrt

Note that ``-x^2`` reads as ``(-x)^2`` under this grammar.  Exponents may
carry a leading ``-`` (``x^-1``).  Decimal literals are read as exact
rationals.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, NamedTuple

from jetcalc.errors import ExprSyntaxError, UnknownIdentifier
from jetcalc.expr import FUNCTIONS, Expr, Func, Mul, Pow, Rational, Var, normalize
from jetcalc.expr import Add as AddNode

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(pos, f"unexpected character {src[pos]!r}", src)
        if m.lastgroup != "ws":
            tokens.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, vocabulary: frozenset):
        self.src = src
        self.vocabulary = vocabulary
        self.tokens = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return ExprSyntaxError(tok.pos, message, self.src)

    def accept(self, text):
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")

    def parse(self) -> Expr:
        if self.tok.kind == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self):
        terms = [self.term()]
        while True:
            if self.accept("+"):
                terms.append(self.term())
            elif self.accept("-"):
                terms.append(Mul([Rational(-1), self.term()]))
            else:
                break
        return terms[0] if len(terms) == 1 else AddNode(terms)

    def term(self):
        factors = [self.factor()]
        while True:
            if self.accept("*"):
                factors.append(self.factor())
            elif self.accept("/"):
                factors.append(Pow(self.factor(), -1))
            else:
                break
        return factors[0] if len(factors) == 1 else Mul(factors)

    def factor(self):
        b = self.base()
        if self.accept("^"):
            sign = -1 if self.accept("-") else 1
            tok = self.tok
            if tok.kind != "number" or not tok.text.isdigit():
                raise self.error("exponent must be an integer literal")
            self.i += 1
            return Pow(b, sign * int(tok.text))
        return b

    def base(self):
        tok = self.tok
        if tok.kind == "number":
            self.i += 1
            q = Fraction(tok.text)
            return Rational(q.numerator, q.denominator)
        if tok.kind == "ident":
            self.i += 1
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(tok.text, arg)
            if tok.text not in self.vocabulary:
                raise UnknownIdentifier(tok.text, tok.pos)
            return Var(tok.text)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("-"):
            return Mul([Rational(-1), self.base()])
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse_raw(src: str, vocabulary: Iterable[str]) -> Expr:
    """Parse without normalizing (keeps the literal tree shape)."""
    return _Parser(src, frozenset(vocabulary)).parse()


def parse_expr(src: str, vocabulary: Iterable[str]) -> Expr:
    """Parse ``src`` over the given coordinate names and normalize the result."""
    return normalize(parse_raw(src, vocabulary))

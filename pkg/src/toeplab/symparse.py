"""Parser for Laurent-polynomial symbol expressions.

Grammar (whitespace ignored)::

    expr   := ['+' | '-'] term (('+' | '-') term)*
    term   := coef ['*'] [var ['^' power]] | var ['^' power]
    coef   := number ['i'] | 'i' | '(' expr0 ')'
    number := digits ['.' digits] [('e'|'E') ['+'|'-'] digits] ['/' digits ...]
    power  := ['+' | '-'] digits | '(' ['+' | '-'] digits ')'
    var    := 'z' | 'zeta' | 't' | 'x'

``expr0`` inside parentheses is an expression in which every term has power
zero, e.g. ``(1+2i)*z^3``.  A bare coefficient has power 0 and a bare ``z``
has power 1.  ``j`` is accepted as a synonym of ``i``.

With ``convention="zeta_inverse"`` the text is read as ``p(1/zeta)`` so a
term ``c*z^k`` contributes ``a_{-k} = c``.  With ``convention="direct"`` a
term ``c*z^j`` contributes ``a_j = c``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import EmptySymbol, InvariantViolation, ParseError
from .symbol import LaurentSymbol

CONVENTIONS = ("zeta_inverse", "direct")
VARIABLES = ("zeta", "z", "t", "x", "ζ")

_TOKEN_RE = re.compile(
    r"""
    (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>zeta|ζ|z|t|x)
  | (?P<imag>[ij])
  | (?P<op>[-+*/^()])
  | (?P<ws>\s+)
    """,
    re.VERBOSE,
)


_KIND_NAMES = {"num": "number", "var": "z", "imag": "i", "end": "end of input"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


@dataclass(frozen=True)
class SymbolExpr:
    """Parsed expression: merged ``(coefficient, power)`` terms."""

    source: str
    terms: tuple[tuple[complex, int], ...]


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos,
                             ("number", "i", "z", "+", "-", "*", "^", "(", ")"))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind if kind != "op" else m.group(), m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, *kinds: str) -> Token:
        if self.tok.kind not in kinds:
            found = self.tok.text or "end of input"
            raise ParseError(f"unexpected {found!r}", self.tok.pos,
                             tuple(_KIND_NAMES.get(k, k) for k in kinds))
        return self.advance()

    def parse(self) -> list[tuple[complex, int]]:
        if self.tok.kind == "end":
            raise ParseError("empty expression", 0, ("number", "i", "z", "("))
        terms = self.expr(allow_var=True)
        self.expect("end")
        return terms

    def expr(self, allow_var: bool) -> list[tuple[complex, int]]:
        sign = 1
        if self.tok.kind in ("+", "-"):
            sign = -1 if self.advance().kind == "-" else 1
        terms = [self.term(sign, allow_var)]
        while self.tok.kind in ("+", "-"):
            sign = -1 if self.advance().kind == "-" else 1
            terms.append(self.term(sign, allow_var))
        return terms

    def term(self, sign: int, allow_var: bool) -> tuple[complex, int]:
        start = self.tok
        coef = None
        if self.tok.kind in ("num", "imag", "("):
            coef = self.coef()
        elif not (allow_var and self.tok.kind == "var"):
            expected = ("number", "i", "(", "z") if allow_var else ("number", "i")
            raise ParseError(f"unexpected {start.text or 'end of input'!r}", start.pos, expected)
        power = 0
        if allow_var:
            if coef is not None and self.tok.kind == "*":
                self.advance()
                self.expect("var")
                power = self.power()
            elif self.tok.kind == "var":
                self.advance()
                power = self.power()
        if coef is None:
            coef = 1 + 0j
        return sign * coef, power

    def coef(self) -> complex:
        if self.tok.kind == "(":
            self.advance()
            inner = self.expr(allow_var=False)
            self.expect(")")
            return complex(sum(c for c, _ in inner))
        if self.tok.kind == "imag":
            self.advance()
            return 1j
        value = self.number()
        if self.tok.kind == "imag":
            self.advance()
            return complex(0.0, value)
        return complex(value)

    def number(self) -> float:
        value = float(self.expect("num").text)
        while self.tok.kind == "/":
            self.advance()
            den = float(self.expect("num").text)
            if den == 0:
                raise ParseError("division by zero", self.tokens[self.i - 1].pos, ("nonzero number",))
            value /= den
        return value

    def power(self) -> int:
        if self.tok.kind != "^":
            return 1
        self.advance()
        paren = self.tok.kind == "("
        if paren:
            self.advance()
        sign = 1
        if self.tok.kind in ("+", "-"):
            sign = -1 if self.advance().kind == "-" else 1
        tok = self.expect("num")
        if not tok.text.isdigit():
            raise ParseError(f"power {tok.text!r} is not an integer", tok.pos, ("integer",))
        if paren:
            self.expect(")")
        return sign * int(tok.text)


def parse_expr(text: str) -> SymbolExpr:
    """Parse ``text`` into merged terms (zero coefficients dropped)."""
    merged: dict[int, complex] = {}
    for c, k in _Parser(text).parse():
        merged[k] = merged.get(k, 0j) + c
    terms = tuple((c, k) for k, c in sorted(merged.items()) if c != 0)
    return SymbolExpr(text, terms)


def parse_symbol(text: str, convention: str = "zeta_inverse") -> LaurentSymbol:
    if convention not in CONVENTIONS:
        raise ParseError(f"unknown convention {convention!r}", 0, CONVENTIONS)
    expr = parse_expr(text)
    if not expr.terms:
        raise EmptySymbol(f"all coefficients of {text!r} cancel")
    sign = -1 if convention == "zeta_inverse" else 1
    coeffs = {sign * k: c for c, k in expr.terms}
    if set(coeffs) == {0}:
        raise InvariantViolation("constant symbol: N_+ = N_- = 0")
    return LaurentSymbol.from_coeffs(coeffs)


def _format_coef(c: complex) -> str:
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}i"
    sign = "-" if c.imag < 0 else "+"
    return f"({c.real!r}{sign}{abs(c.imag)!r}i)"


def format_terms(terms) -> str:
    parts = []
    for c, k in terms:
        body = _format_coef(complex(c))
        if k != 0:
            body += f"*z^{k}"
        parts.append(body)
    text = " + ".join(parts)
    return text.replace("+ -", "- ")


def format_symbol(sym: LaurentSymbol, convention: str = "zeta_inverse") -> str:
    """Text that :func:`parse_symbol` maps back to ``sym`` exactly."""
    sign = -1 if convention == "zeta_inverse" else 1
    return format_terms(sorted(((c, sign * j) for j, c in sym.coeffs.items()), key=lambda t: t[1]))


def mirror(text: str) -> str:
    """Expression with every power negated."""
    return format_terms((c, -k) for c, k in parse_expr(text).terms)

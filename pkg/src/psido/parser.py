"""Text grammar for symbols and phase-space expressions.

Expressions: variables x1..x9, xi1..xi9, the imaginary unit `i`, numeric
literals, operators + - * / ^ with conventional precedence (^ binds
tightest, right-associative, constant exponent), functions sin, cos, exp,
sqrt, and `|xi|` as sugar for sqrt(xi1^2 + ... + xin^2).

Symbol documents:

    symbol P {
      dim=2 order=2 trunc=4
      term 2: "xi1^2 + (1+0.5*sin(x1))*xi2^2"
    }

Degrees must be strictly decreasing and stay above order - trunc; every
term is validated against the Euler relation at parse time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import expr as ex
from .errors import DegreeOrderError
from .symbols import ClassicalSymbol, HomogeneousTerm

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+\.\d*|\.\d+|\d+)
  | (?P<name>xi[1-9]|x[1-9]|sin|cos|exp|sqrt|i)
  | (?P<op>\|xi\||[-+*/^()|])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(text: str):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SyntaxError(
                f"unexpected character {text[pos]!r} at position {pos}")
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _ExprParser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.n = dimension
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def take(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            raise SyntaxError(
                f"expected {value!r} at position {pos}, found {val or 'end'!r}")

    def parse(self) -> ex.Expr:
        e = self.sum_()
        kind, val, pos = self.peek()
        if kind != "end":
            raise SyntaxError(
                f"unexpected {val!r} at position {pos}")
        return e

    def sum_(self) -> ex.Expr:
        e = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.product()
            e = ex.add(e, rhs if op == "+" else ex.neg(rhs))
        return e

    def product(self) -> ex.Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = ex.mul(e, rhs) if op == "*" else ex.div(e, rhs)
        return e

    def unary(self) -> ex.Expr:
        if self.peek()[1] == "-":
            self.take()
            return ex.neg(self.unary())
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> ex.Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            expo = self.unary()
            if not isinstance(expo, ex.Const) or expo.value.imag != 0:
                raise SyntaxError(
                    f"exponent after position {pos} must be a real constant")
            return ex.pow_(base, expo.value.real)
        return base

    def atom(self) -> ex.Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return ex.Const(float(val))
        if kind == "name":
            if val == "i":
                return ex.I
            if val in ("sin", "cos", "exp", "sqrt"):
                self.expect("(")
                arg = self.sum_()
                self.expect(")")
                return {"sin": ex.sin, "cos": ex.cos,
                        "exp": ex.exp, "sqrt": ex.sqrt}[val](arg)
            if val.startswith("xi"):
                j = int(val[2:])
                if j > self.n:
                    raise SyntaxError(
                        f"variable {val} exceeds dimension {self.n} "
                        f"at position {pos}")
                return ex.xi(j)
            j = int(val[1:])
            if j > self.n:
                raise SyntaxError(
                    f"variable {val} exceeds dimension {self.n} "
                    f"at position {pos}")
            return ex.x(j)
        if val == "(":
            e = self.sum_()
            self.expect(")")
            return e
        if val == "|xi|":
            return ex.xi_norm(self.n)
        raise SyntaxError(
            f"unexpected {val or 'end'!r} at position {pos}")


def parse_expr(text: str, dimension: int) -> ex.Expr:
    """Parse an expression over x1..xn, xi1..xin."""
    return _ExprParser(text, dimension).parse()


@dataclass(frozen=True)
class SymbolDocument:
    name: str
    dimension: int
    leading_order: float
    truncation_order: int
    terms: tuple    # of (degree, expression text)

    def to_symbol(self) -> ClassicalSymbol:
        built = []
        for degree, text in self.terms:
            e = parse_expr(text, self.dimension)
            built.append(HomogeneousTerm.checked(e, degree, self.dimension))
        return ClassicalSymbol(self.leading_order, tuple(built),
                               self.truncation_order, self.dimension)


_DOC_RE = re.compile(
    r"\s*symbol\s+(?P<name>\w+)\s*\{(?P<body>.*)\}\s*$", re.DOTALL)
_FIELD_RE = re.compile(r"(dim|order|trunc)\s*=\s*(-?\d+(?:\.\d+)?)")
_TERM_RE = re.compile(r"term\s+(-?\d+(?:\.\d+)?)\s*:\s*\"([^\"]*)\"")


def parse_symbol_document(text: str) -> SymbolDocument:
    m = _DOC_RE.match(text)
    if m is None:
        raise SyntaxError("expected `symbol NAME { ... }`")
    body = m.group("body")
    fields = {k: float(v) for k, v in _FIELD_RE.findall(body)}
    for req in ("dim", "order", "trunc"):
        if req not in fields:
            raise SyntaxError(f"missing field {req}= in symbol body")
    n = int(fields["dim"])
    order = fields["order"]
    trunc = int(fields["trunc"])
    terms = [(float(d), t) for d, t in _TERM_RE.findall(body)]
    if not terms:
        raise SyntaxError("symbol body declares no terms")
    degrees = [d for d, _ in terms]
    if any(b >= a for a, b in zip(degrees, degrees[1:])):
        raise DegreeOrderError("term degrees must be strictly decreasing")
    if degrees[0] > order or any(d <= order - trunc for d in degrees):
        raise DegreeOrderError(
            f"degrees must lie in ({order - trunc}, {order}]")
    return SymbolDocument(m.group("name"), n, order, trunc, tuple(terms))


def parse_symbol_text(text: str) -> ClassicalSymbol:
    """Parse and fully validate a symbol document."""
    return parse_symbol_document(text).to_symbol()


def render_report(P: ClassicalSymbol) -> str:
    """Stable `degree <d>: <expression>` listing (diff-friendly)."""
    return P.render()

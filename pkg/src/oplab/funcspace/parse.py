"""Textual grammar for analytic functions.

::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | primary
    primary := number | number 'i' | 'i' | 'z' | '(' expr ')'
             | 'const(' lit ')' | 'poly(' lit (',' lit)* ')'
             | 'sigma(' lit ')' | 'testfn(' int ',' lit ')'
             | 'compose(' expr ',' expr ')' | 'dilate(' real ',' expr ')'

``lit`` is any constant expression, so complex literals are written
``0.3+0.2i`` or ``-0.5i``.
"""

from __future__ import annotations

import re

from ..errors import DomainError, ParseError
from .expr import (
    AnalyticFn,
    Compose,
    Const,
    Dilate,
    MobiusSigma,
    Poly,
    Product,
    Quotient,
    Sum,
    TestFn,
    Var,
)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i)?|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/(),]))"
)

_FUNCS = {"const", "poly", "sigma", "testfn", "compose", "dilate"}


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    toks = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].strip()[:1]!r} at position {pos} in {text!r}")
        if m.group("num") is not None:
            v = float(m.group("num"))
            toks.append(("num", complex(0, v) if m.group("imag") else complex(v), m.start("num")))
        elif m.group("name") is not None:
            toks.append(("name", m.group("name"), m.start("name")))
        else:
            toks.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    toks.append(("end", None, len(text)))
    return toks


def constant_value(node: AnalyticFn) -> complex:
    """Fold a z-free expression to a number; raise ParseError otherwise."""
    if isinstance(node, Const):
        return complex(node.c)
    if isinstance(node, Sum):
        return sum((constant_value(c) for c in node.children), 0j)
    if isinstance(node, Product):
        out = 1 + 0j
        for c in node.children:
            out *= constant_value(c)
        return out
    if isinstance(node, Quotient):
        den = constant_value(node.den)
        if den == 0:
            raise ParseError("division by zero in a constant literal")
        return constant_value(node.num) / den
    raise ParseError(f"expected a constant literal, got {node}")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] if tok[0] != "end" else "end of input"
            raise ParseError(f"expected {want!r} at position {tok[2]} in {self.text!r}, got {got!r}")
        self.i += 1
        return tok

    def parse(self) -> AnalyticFn:
        node = self.expr()
        self.take("end")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            node = Sum((node, rhs)) if op == "+" else Sum((node, Product((Const(-1), rhs))))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            rhs = self.unary()
            node = Product((node, rhs)) if op == "*" else Quotient(node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-", self.peek()[2]):
            self.take()
            inner = self.unary()
            if isinstance(inner, Const):
                return Const(-inner.c)
            return Product((Const(-1), inner))
        if self.peek()[0] == "op" and self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.primary()

    def primary(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return Const(val)
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        if kind == "name":
            self.take()
            if val == "z":
                return Var()
            if val == "i":
                return Const(1j)
            if val not in _FUNCS:
                raise ParseError(f"unknown node {val!r} at position {pos} in {self.text!r}")
            self.take("op", "(")
            args = [self.expr()]
            while self.peek()[0] == "op" and self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
            self.take("op", ")")
            return self.build(val, args, pos)
        raise ParseError(f"unexpected token {val!r} at position {pos} in {self.text!r}")

    def build(self, name, args, pos):
        def arity(n):
            if len(args) != n:
                raise ParseError(f"{name}() takes {n} argument(s), got {len(args)} at position {pos}")

        try:
            if name == "const":
                arity(1)
                return Const(constant_value(args[0]))
            if name == "poly":
                return Poly(tuple(constant_value(a) for a in args))
            if name == "sigma":
                arity(1)
                return MobiusSigma(constant_value(args[0]))
            if name == "testfn":
                arity(2)
                j = constant_value(args[0])
                if j.imag != 0 or j.real != int(j.real) or j.real < 1:
                    raise ParseError(f"testfn exponent must be a positive integer, got {j}")
                return TestFn(int(j.real), constant_value(args[1]))
            if name == "compose":
                arity(2)
                return Compose(args[0], args[1])
            if name == "dilate":
                arity(2)
                r = constant_value(args[0])
                if r.imag != 0:
                    raise ParseError("dilation radius must be real")
                return Dilate(r.real, args[1])
        except DomainError as exc:
            raise ParseError(f"{name}() at position {pos}: {exc} (atom outside disk)") from exc
        raise ParseError(f"unknown node {name!r}")  # pragma: no cover


def parse_fn(text: str) -> AnalyticFn:
    """Parse an expression string into an :class:`AnalyticFn`."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    return _Parser(text).parse()

"""Small arithmetic expression language for user-supplied profiles.

Grammar (``^`` is right-associative and binds tighter than unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'

Names are looked up in the evaluation environment (``x1``, ``x2``, ``x3``,
``r``, ``zeta`` by convention) or are the constants ``pi`` and ``e``.
Compiled expressions evaluate element-wise on numpy arrays.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ExpressionError

CONSTANTS = {"pi": math.pi, "e": math.e}

FUNCTIONS: dict[str, tuple[Callable, int]] = {
    "abs": (np.abs, 1),
    "sqrt": (np.sqrt, 1),
    "exp": (np.exp, 1),
    "log": (np.log, 1),
    "cos": (np.cos, 1),
    "sin": (np.sin, 1),
    "cosh": (np.cosh, 1),
    "sinh": (np.sinh, 1),
    "tanh": (np.tanh, 1),
    "max": (np.maximum, 2),
    "min": (np.minimum, 2),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list[_Tok]:
    out = []
    pos = 0
    n = len(src)
    while pos < n:
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExpressionError(f"unexpected character {src[bad]!r} at column {bad + 1}")
        kind = m.lastgroup
        out.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(_Tok("end", "", n))
    return out


class _Parser:
    def __init__(self, src):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text):
        t = self.take()
        if t.text != text:
            found = "end of input" if t.kind == "end" else repr(t.text)
            raise ExpressionError(f"expected {text!r} at column {t.pos + 1}, found {found}")
        return t

    def parse(self):
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ExpressionError(f"unexpected {t.text!r} at column {t.pos + 1}")
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            op = self.take().text
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ("*", "/"):
            op = self.take().text
            node = (op, node, self.unary())
        return node

    def unary(self):
        t = self.peek()
        if t.text == "-":
            self.take()
            return ("neg", self.unary())
        if t.text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            return ("^", base, self.unary())
        return base

    def atom(self):
        t = self.take()
        if t.kind == "num":
            return ("num", float(t.text))
        if t.kind == "name":
            if self.peek().text == "(":
                if t.text not in FUNCTIONS:
                    raise ExpressionError(f"unknown function {t.text!r} at column {t.pos + 1}")
                self.take()
                args = [self.expr()]
                while self.peek().text == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[t.text][1]
                if len(args) != arity:
                    raise ExpressionError(
                        f"{t.text} takes {arity} argument(s), got {len(args)} (column {t.pos + 1})")
                return ("call", t.text, args)
            if t.text in CONSTANTS:
                return ("num", CONSTANTS[t.text])
            return ("var", t.text, t.pos)
        if t.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExpressionError(f"unexpected {found} at column {t.pos + 1}")


def _names(node, acc):
    tag = node[0]
    if tag == "var":
        acc.add(node[1])
    elif tag == "neg":
        _names(node[1], acc)
    elif tag == "call":
        for a in node[2]:
            _names(a, acc)
    elif tag in "+-*/^":
        _names(node[1], acc)
        _names(node[2], acc)
    return acc


def _eval(node, env):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        try:
            return env[node[1]]
        except KeyError:
            raise ExpressionError(f"unknown name {node[1]!r} at column {node[2] + 1}") from None
    if tag == "neg":
        return -_eval(node[1], env)
    if tag == "call":
        fn = FUNCTIONS[node[1]][0]
        return fn(*[_eval(a, env) for a in node[2]])
    a = _eval(node[1], env)
    b = _eval(node[2], env)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        return np.divide(a, b)
    return np.power(a, b)


@dataclass(frozen=True)
class Expression:
    """A compiled expression; call with keyword arrays, e.g. ``f(zeta=z)``."""

    source: str
    tree: tuple = field(repr=False)
    names: frozenset = field(repr=False)

    def __call__(self, **env):
        unknown = self.names - env.keys()
        if unknown:
            raise ExpressionError(f"unbound name(s): {', '.join(sorted(unknown))}")
        arrays = {k: np.asarray(v, float) for k, v in env.items()}
        with np.errstate(all="ignore"):
            out = _eval(self.tree, arrays)
        shape = np.broadcast_shapes(*(a.shape for a in arrays.values())) if arrays else ()
        return np.broadcast_to(np.asarray(out, float), shape).copy() if shape else np.asarray(out, float)


def compile_expr(src: str, allowed=None) -> Expression:
    """Parse ``src``; if ``allowed`` is given, reject any other free names."""
    if not isinstance(src, str):
        raise ExpressionError("expression must be a string")
    tree = _Parser(src).parse()
    names = frozenset(_names(tree, set()))
    if allowed is not None:
        extra = names - set(allowed)
        if extra:
            raise ExpressionError(
                f"unknown name(s) {', '.join(sorted(extra))}; allowed: {', '.join(sorted(allowed))}")
    return Expression(src, tree, names)

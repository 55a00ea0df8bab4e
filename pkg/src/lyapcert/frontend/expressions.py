"""Arithmetic expression language for system definitions.

Grammar (left-associative +,-,*,/; right-associative ^; unary minus
binds tighter than ^, so -x^2 means (-x)^2):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | 't' | ident '[' integer ']' | ident
            | func '(' expr (',' expr)? ')' | '(' expr ')'

Known functions: abs, sin, cos, exp, tanh, sqrt (one argument) and
min, max (two arguments).  ``t`` is the time symbol, ``x[i]``/``y[i]``
are state references, any other identifier is a parameter reference.
The pretty-printer emits a canonical form that reparses to an identical
tree and is a fixed point of print-then-parse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from ..errors import ParseError

__all__ = [
    "Num",
    "Time",
    "Ref",
    "Neg",
    "Call",
    "Bin",
    "parse_expression",
    "pretty",
    "evaluate",
    "free_refs",
    "FUNCTIONS",
]

FUNCTIONS = {
    "abs": (1, abs),
    "sin": (1, math.sin),
    "cos": (1, math.cos),
    "exp": (1, math.exp),
    "tanh": (1, math.tanh),
    "sqrt": (1, math.sqrt),
    "min": (2, min),
    "max": (2, max),
}

_SYMBOLS = "+-*/^()[],"


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Time:
    pass


@dataclass(frozen=True)
class Ref:
    """State reference when ``index`` is set, else a parameter reference."""

    name: str
    index: Optional[int] = None


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    fn: str
    args: Tuple[object, ...]


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class _Token:
    kind: str  # number | ident | symbol | end
    text: str
    line: int
    column: int


def _tokenize(src: str) -> list:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            start = i
            start_col = col
            while i < n and (src[i].isdigit() or src[i] == "."):
                i += 1
            if i < n and src[i] in "eE":
                j = i + 1
                if j < n and src[j] in "+-":
                    j += 1
                if j < n and src[j].isdigit():
                    i = j
                    while i < n and src[i].isdigit():
                        i += 1
            text = src[start:i]
            if text.count(".") > 1:
                raise ParseError(f"malformed number '{text}'", line, start_col)
            tokens.append(_Token("number", text, line, start_col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            start_col = col
            while i < n and (src[i].isalnum() or src[i] == "_"):
                i += 1
            tokens.append(_Token("ident", src[start:i], line, start_col))
            col += i - start
            continue
        if ch in _SYMBOLS:
            tokens.append(_Token("symbol", ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "symbol" and tok.text == text:
            return self.advance()
        shown = tok.text if tok.kind != "end" else "end of input"
        raise ParseError(f"expected '{text}', found {shown!r}", tok.line, tok.column)

    def at_symbol(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "symbol" and tok.text in texts

    def expr(self):
        node = self.term()
        while self.at_symbol("+", "-"):
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.at_symbol("*", "/"):
            op = self.advance().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        base = self.unary()
        if self.at_symbol("^"):
            self.advance()
            return Bin("^", base, self.factor())
        return base

    def unary(self):
        if self.at_symbol("-"):
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            name = tok.text
            if self.at_symbol("["):
                self.advance()
                idx = self.peek()
                if idx.kind != "number" or not idx.text.isdigit():
                    shown = idx.text if idx.kind != "end" else "end of input"
                    raise ParseError(f"expected integer index, found {shown!r}", idx.line, idx.column)
                self.advance()
                self.expect("]")
                return Ref(name, int(idx.text))
            if self.at_symbol("("):
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function '{name}'", tok.line, tok.column)
                arity = FUNCTIONS[name][0]
                self.advance()
                args = [self.expr()]
                while self.at_symbol(","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != arity:
                    raise ParseError(
                        f"'{name}' expects {arity} argument(s), got {len(args)}",
                        tok.line,
                        tok.column,
                    )
                return Call(name, tuple(args))
            if name == "t":
                return Time()
            return Ref(name, None)
        if self.at_symbol("("):
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        shown = tok.text if tok.kind != "end" else "end of input"
        raise ParseError(f"expected a value, found {shown!r}", tok.line, tok.column)


def parse_expression(src: str):
    """Parse source text into an expression tree; errors carry line/column."""
    if not src or not src.strip():
        raise ParseError("empty expression")
    parser = _Parser(_tokenize(src))
    node = parser.expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.line, tail.column)
    return node


def _p_expr(n) -> str:
    if isinstance(n, Bin) and n.op in "+-":
        return f"{_p_expr(n.left)}{n.op}{_p_term(n.right)}"
    return _p_term(n)


def _p_term(n) -> str:
    if isinstance(n, Bin) and n.op in "*/":
        return f"{_p_term(n.left)}{n.op}{_p_factor(n.right)}"
    return _p_factor(n)


def _p_factor(n) -> str:
    if isinstance(n, Bin) and n.op == "^":
        return f"{_p_unary(n.left)}^{_p_factor(n.right)}"
    return _p_unary(n)


def _p_unary(n) -> str:
    if isinstance(n, Neg):
        return f"-{_p_unary(n.arg)}"
    return _p_atom(n)


def _p_atom(n) -> str:
    if isinstance(n, Num):
        return repr(n.value)
    if isinstance(n, Time):
        return "t"
    if isinstance(n, Ref):
        return n.name if n.index is None else f"{n.name}[{n.index}]"
    if isinstance(n, Call):
        return f"{n.fn}({','.join(_p_expr(a) for a in n.args)})"
    return f"({_p_expr(n)})"


def pretty(node) -> str:
    """Canonical text form; reparses to a structurally identical tree."""
    return _p_expr(node)


def evaluate(node, t, x, y=None, params=None) -> float:
    """Evaluate the tree; division by zero and sqrt of negatives raise."""
    params = params or {}
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Time):
        return float(t)
    if isinstance(node, Ref):
        if node.index is None:
            if node.name not in params:
                raise ValueError(f"unbound parameter '{node.name}'")
            return float(params[node.name])
        if node.name == "x":
            return float(x[node.index])
        if node.name == "y":
            if y is None:
                raise ValueError("expression references y but no fast state was given")
            return float(y[node.index])
        raise ValueError(f"unknown state vector '{node.name}'")
    if isinstance(node, Neg):
        return -evaluate(node.arg, t, x, y, params)
    if isinstance(node, Call):
        fn = FUNCTIONS[node.fn][1]
        return float(fn(*(evaluate(a, t, x, y, params) for a in node.args)))
    if isinstance(node, Bin):
        lhs = evaluate(node.left, t, x, y, params)
        rhs = evaluate(node.right, t, x, y, params)
        if node.op == "+":
            return lhs + rhs
        if node.op == "-":
            return lhs - rhs
        if node.op == "*":
            return lhs * rhs
        if node.op == "/":
            if rhs == 0.0:
                raise ZeroDivisionError("division by zero in expression")
            return lhs / rhs
        return lhs ** rhs
    raise TypeError(f"not an expression node: {node!r}")


def free_refs(node) -> set:
    """All (name, index) references in the tree; index None for parameters."""
    if isinstance(node, Ref):
        return {(node.name, node.index)}
    if isinstance(node, Neg):
        return free_refs(node.arg)
    if isinstance(node, Call):
        out = set()
        for a in node.args:
            out |= free_refs(a)
        return out
    if isinstance(node, Bin):
        return free_refs(node.left) | free_refs(node.right)
    return set()

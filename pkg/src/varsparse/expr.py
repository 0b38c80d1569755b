"""Closed-form expression language used to declare exponents, weights and symbols.

Grammar (whitespace-insensitive)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right-associative, binds tighter than unary minus
    atom    := number | "e" | "pi" | "x" digits
             | name "(" expr ("," expr)* ")"
             | "(" expr ")"
    name    := log | exp | abs | min | max | pow | sin | cos | floor

All arithmetic is IEEE double. ``-2^2`` is ``-(2^2)`` and ``2^-1`` is ``0.5``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

__all__ = [
    "ExpressionError",
    "ExpressionSyntaxError",
    "ExpressionDomainError",
    "Num",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expression",
    "parse_expression",
    "to_source",
    "evaluate",
    "compile_expression",
]


class ExpressionError(ValueError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExpressionDomainError(ExpressionError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Num, Const, Var, Neg, BinOp, Call]

CONSTANTS = {"e": math.e, "pi": math.pi}
# name -> (min args, max args)
FUNCTIONS = {
    "log": (1, 1),
    "exp": (1, 1),
    "abs": (1, 1),
    "sin": (1, 1),
    "cos": (1, 1),
    "floor": (1, 1),
    "pow": (2, 2),
    "min": (2, None),
    "max": (2, None),
}


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with the dimension it was declared for."""

    root: Node
    dimension: int
    source: str = ""

    def __call__(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def __str__(self) -> str:
        return to_source(self.root)

    def __eq__(self, other):
        if not isinstance(other, Expression):
            return NotImplemented
        return self.root == other.root and self.dimension == other.dimension

    def __hash__(self):
        return hash((self.root, self.dimension))


# --------------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExpressionSyntaxError(
                f"unexpected character {src[pos]!r}", _byte_offset(src, pos)
            )
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), _byte_offset(src, pos)))
        pos = m.end()
    toks.append(_Tok("eof", "", _byte_offset(src, len(src))))
    return toks


def _byte_offset(src: str, char_pos: int) -> int:
    return len(src[:char_pos].encode("utf-8"))


# --------------------------------------------------------------------------- parser


class _Parser:
    def __init__(self, src: str, dimension: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.dimension = dimension

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind not in ("op",):
            raise ExpressionSyntaxError(
                f"expected {text!r}, found {self.tok.text or 'end of input'!r}",
                self.tok.offset,
            )
        return self.advance()

    def _starts_operand(self) -> bool:
        t = self.tok
        return t.kind in ("num", "name") or (t.kind == "op" and t.text in "(-")

    def _operand_after(self, op: _Tok, parse):
        # a binary operator with nothing usable to its right is reported at the operator
        if not self._starts_operand():
            raise ExpressionSyntaxError(f"missing operand after {op.text!r}", op.offset)
        return parse()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            raise ExpressionSyntaxError(f"unexpected {self.tok.text!r}", self.tok.offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance()
            node = BinOp(op.text, node, self._operand_after(op, self.term))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance()
            node = BinOp(op.text, node, self._operand_after(op, self.unary))
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            op = self.advance()
            return Neg(self._operand_after(op, self.unary))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            op = self.advance()
            return BinOp("^", base, self._operand_after(op, self.unary))
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            name = t.text
            if self.tok.kind == "op" and self.tok.text == "(":
                if name not in FUNCTIONS:
                    raise ExpressionSyntaxError(f"unknown function {name!r}", t.offset)
                self.advance()
                args = [self.expr()]
                while self.tok.kind == "op" and self.tok.text == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                lo, hi = FUNCTIONS[name]
                if len(args) < lo or (hi is not None and len(args) > hi):
                    raise ExpressionSyntaxError(
                        f"{name} takes {lo}{'+' if hi is None else ''} argument(s), got {len(args)}",
                        t.offset,
                    )
                return Call(name, tuple(args))
            if name in CONSTANTS:
                return Const(name)
            m = re.fullmatch(r"x([1-9]\d*)", name)
            if m:
                idx = int(m.group(1))
                if idx > self.dimension:
                    raise ExpressionSyntaxError(
                        f"variable index exceeds dimension ({name} with n={self.dimension})",
                        t.offset,
                    )
                return Var(idx)
            raise ExpressionSyntaxError(f"unknown identifier {name!r}", t.offset)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionSyntaxError(
            f"expected an operand, found {t.text or 'end of input'!r}", t.offset
        )


def parse_expression(src: str, dimension: int) -> Expression:
    if not isinstance(src, str) or not src.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    if dimension < 1:
        raise ExpressionError("dimension must be a positive integer")
    return Expression(_Parser(src, dimension).parse(), dimension, src)


# --------------------------------------------------------------------------- printer


def to_source(node: Node | Expression) -> str:
    """Fully parenthesised source text; parsing it back gives the same tree."""
    if isinstance(node, Expression):
        node = node.root
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(node)


# --------------------------------------------------------------------------- evaluation


def _pow(a: float, b: float) -> float:
    if a == 0.0 and b < 0.0:
        raise ExpressionDomainError(f"0^{b!r} is undefined")
    try:
        return math.pow(a, b)
    except ValueError:
        raise ExpressionDomainError(f"{a!r}^{b!r} is not real") from None
    except OverflowError:
        return math.inf


def _log(a: float) -> float:
    if not a > 0.0:
        raise ExpressionDomainError(f"log({a!r}) is undefined")
    return math.log(a)


def _exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _div(a: float, b: float) -> float:
    if b == 0.0:
        raise ExpressionDomainError("division by zero")
    return a / b


_UNARY_FUNCS: dict[str, Callable[[float], float]] = {
    "log": _log,
    "exp": _exp,
    "abs": abs,
    "sin": math.sin,
    "cos": math.cos,
    "floor": lambda a: float(math.floor(a)),
}

_BIN_FUNCS: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}


def _compile(node: Node) -> Callable[[Sequence[float]], float]:
    if isinstance(node, Num):
        v = node.value
        return lambda x: v
    if isinstance(node, Const):
        v = CONSTANTS[node.name]
        return lambda x: v
    if isinstance(node, Var):
        i = node.index - 1
        return lambda x: float(x[i])
    if isinstance(node, Neg):
        f = _compile(node.operand)
        return lambda x: -f(x)
    if isinstance(node, BinOp):
        lf, rf, op = _compile(node.left), _compile(node.right), _BIN_FUNCS[node.op]
        return lambda x: op(lf(x), rf(x))
    if isinstance(node, Call):
        fs = [_compile(a) for a in node.args]
        if node.name in _UNARY_FUNCS:
            g, f0 = _UNARY_FUNCS[node.name], fs[0]
            return lambda x: g(f0(x))
        if node.name == "pow":
            f0, f1 = fs
            return lambda x: _pow(f0(x), f1(x))
        agg = min if node.name == "min" else max
        return lambda x: agg(f(x) for f in fs)
    raise TypeError(node)


_COMPILED: dict[Expression, Callable] = {}


def compile_expression(expr: Expression) -> Callable[[Sequence[float]], float]:
    fn = _COMPILED.get(expr)
    if fn is None:
        fn = _COMPILED[expr] = _compile(expr.root)
    return fn


def evaluate(expr: Expression, point: Sequence[float]) -> float:
    if len(point) != expr.dimension:
        raise ExpressionError(
            f"point has dimension {len(point)}, expression expects {expr.dimension}"
        )
    return compile_expression(expr)(point)

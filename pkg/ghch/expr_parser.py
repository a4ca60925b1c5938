"""Coefficient expression language.

Coefficients, forcing and initial data are written as small arithmetic
expressions, e.g. ``"0.05*cos(x)*(2 + sin(x))"``. The grammar is::

    expr    := number | name | name "(" expr ")" | "(" expr ")"
             | "-" expr | expr ("+" | "-" | "*" | "/" | "^") expr

with precedence ``^`` > unary ``-`` > ``* /`` > ``+ -`` and ``^``
right-associative. Parsing is a Pratt (top-down operator precedence)
parser; evaluation works on floats and on numpy arrays alike.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Union

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator, Mapping

Value = Union[float, np.ndarray]


class ExpressionError(ValueError):
    """Base class for all errors raised by the expression language."""


class ExprSyntaxError(ExpressionError):
    def __init__(self, message: str, src: str, position: int) -> None:
        self.src = src
        self.position = position
        super().__init__(f"{message} at position {position} in {src!r}")


class UnknownVariableError(ExpressionError):
    def __init__(self, name: str, allowed: Iterable[str], position: int) -> None:
        self.name = name
        self.allowed = frozenset(allowed)
        self.position = position
        allowed_str = ", ".join(sorted(self.allowed)) or "none"
        super().__init__(
            f"unknown variable {name!r} at position {position} (allowed: {allowed_str})"
        )


class EvaluationError(ExpressionError):
    pass


def _sech(x):
    # 2 e^{-|x|} / (1 + e^{-2|x|}) never overflows
    e = np.exp(-np.abs(x))
    return 2 * e / (1 + e * e)


def _sqrt(x):
    if np.any(np.asarray(x) < 0):
        raise EvaluationError("sqrt of a negative number")
    return np.sqrt(x)


FUNCTIONS: dict[str, Callable[[Value], Value]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sech": _sech,
    "sqrt": _sqrt,
    "abs": np.abs,
}
CONSTANTS: dict[str, float] = {"pi": float(np.pi)}

MAX_DEPTH = 200


# AST nodes. Spans do not take part in equality, so two trees parsed from
# differently formatted sources compare equal when their structure does.


@dataclass(frozen=True)
class ExprAst:
    span: tuple[int, int] = field(default=(0, 0), compare=False, repr=False)

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        raise NotImplementedError

    def variables(self) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True)
class Constant(ExprAst):
    value: float = 0.0

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        return self.value


@dataclass(frozen=True)
class Variable(ExprAst):
    name: str = ""

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        assert self.name in bindings, f"no binding for variable {self.name!r}"
        return bindings[self.name]

    def variables(self) -> frozenset[str]:
        return frozenset({self.name})


@dataclass(frozen=True)
class UnaryOp(ExprAst):
    op: str = "-"
    operand: ExprAst = field(default_factory=Constant)

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        return -self.operand.evaluate(bindings)

    def variables(self) -> frozenset[str]:
        return self.operand.variables()


@dataclass(frozen=True)
class BinaryOp(ExprAst):
    op: str = "+"
    left: ExprAst = field(default_factory=Constant)
    right: ExprAst = field(default_factory=Constant)

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        a = self.left.evaluate(bindings)
        b = self.right.evaluate(bindings)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvaluationError("division by zero")
            return a / b
        base = np.asarray(a, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            result = np.power(base, b)
        if np.any(np.isnan(result) & ~np.isnan(base) & ~np.isnan(b)):
            raise EvaluationError("non-integer power of a negative number")
        if np.any((base == 0) & (np.asarray(b) < 0)):
            raise EvaluationError("division by zero (zero to a negative power)")
        return result

    def variables(self) -> frozenset[str]:
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class FunctionCall(ExprAst):
    func: str = "abs"
    arg: ExprAst = field(default_factory=Constant)

    def evaluate(self, bindings: Mapping[str, Value]) -> Value:
        return FUNCTIONS[self.func](self.arg.evaluate(bindings))

    def variables(self) -> frozenset[str]:
        return self.arg.variables()


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number", "name", "op" or "end"
    text: str
    position: int


def _tokenize(src: str) -> Iterator[_Token]:
    position = 0
    while position < len(src):
        match = _TOKEN_RE.match(src, position)
        if match is None or match.end() == position:
            if src[position:].strip() == "":
                break
            start = position + len(src[position:]) - len(src[position:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", src, start)
        kind = match.lastgroup
        start = match.start(kind)
        yield _Token(kind, match.group(kind), start)
        position = match.end()
    yield _Token("end", "", len(src))


# binding powers
_INFIX = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_MINUS = 25


class _Parser:
    def __init__(self, src: str, allowed_vars: frozenset[str]) -> None:
        self.src = src
        self.allowed_vars = allowed_vars
        self.tokens = list(_tokenize(src))
        self.index = 0
        self.depth = 0

    @property
    def token(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, text: str) -> _Token:
        if self.token.text != text or self.token.kind != "op":
            raise ExprSyntaxError(
                f"expected {text!r}, found {self.token.text or 'end of input'!r}",
                self.src,
                self.token.position,
            )
        return self.advance()

    def parse(self) -> ExprAst:
        ast = self.expression(0)
        if self.token.kind != "end":
            raise ExprSyntaxError(
                f"unexpected {self.token.text!r}", self.src, self.token.position
            )
        return ast

    def expression(self, rbp: int) -> ExprAst:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", self.src, self.token.position)
        left = self.prefix()
        chain = 0
        while self.token.kind == "op" and rbp < _INFIX.get(self.token.text, 0):
            chain += 1
            if self.depth + chain > MAX_DEPTH:
                raise ExprSyntaxError("expression nested too deeply", self.src, self.token.position)
            op = self.advance()
            lbp = _INFIX[op.text]
            # ^ is right-associative
            right = self.expression(lbp - 1 if op.text == "^" else lbp)
            left = BinaryOp(
                span=(left.span[0], right.span[1]), op=op.text, left=left, right=right
            )
        self.depth -= 1
        return left

    def prefix(self) -> ExprAst:
        token = self.advance()
        if token.kind == "number":
            value = float(token.text)
            if not math.isfinite(value):
                raise ExprSyntaxError("number out of range", self.src, token.position)
            return Constant(span=(token.position, token.position + len(token.text)), value=value)
        if token.kind == "name":
            return self.name(token)
        if token.kind == "op" and token.text == "-":
            operand = self.expression(_UNARY_MINUS)
            return UnaryOp(span=(token.position, operand.span[1]), op="-", operand=operand)
        if token.kind == "op" and token.text == "(":
            inner = self.expression(0)
            close = self.expect(")")
            return _respan(inner, (token.position, close.position + 1))
        what = repr(token.text) if token.text else "end of input"
        raise ExprSyntaxError(f"unexpected {what}", self.src, token.position)

    def name(self, token: _Token) -> ExprAst:
        end = token.position + len(token.text)
        if token.text in FUNCTIONS:
            self.expect("(")
            arg = self.expression(0)
            close = self.expect(")")
            return FunctionCall(span=(token.position, close.position + 1), func=token.text, arg=arg)
        if token.text in CONSTANTS:
            return Constant(span=(token.position, end), value=CONSTANTS[token.text])
        if token.text not in self.allowed_vars:
            raise UnknownVariableError(token.text, self.allowed_vars, token.position)
        return Variable(span=(token.position, end), name=token.text)


def _respan(ast: ExprAst, span: tuple[int, int]) -> ExprAst:
    return type(ast)(**{**ast.__dict__, "span": span})


def parse(src: str, allowed_vars: Iterable[str] = ()) -> ExprAst:
    """Parse an expression.

    Parameters
    ----------
    src : str
        Expression source. Must not be blank.
    allowed_vars : Iterable[str]
        Names that may appear as variables. Any other identifier that is
        not a function or a constant is rejected.

    Raises
    ------
    ExprSyntaxError
        Malformed input; carries the position of the offending token.
    UnknownVariableError
        An identifier outside ``allowed_vars``.
    """
    if not src.strip():
        raise ExprSyntaxError("empty expression", src, 0)
    return _Parser(src, frozenset(allowed_vars)).parse()


def evaluate(ast: ExprAst, bindings: Mapping[str, Value]) -> Value:
    """Evaluate in double precision. Bindings may be floats or arrays."""
    return ast.evaluate(bindings)


def evaluate_on(ast: ExprAst, bindings: Mapping[str, Value], shape: tuple[int, ...]) -> np.ndarray:
    """Evaluate and broadcast the result to a float array of ``shape``."""
    return np.array(np.broadcast_to(ast.evaluate(bindings), shape), dtype=float)


def to_source(ast: ExprAst) -> str:
    """Fully parenthesized source that parses back to an equal tree."""
    if isinstance(ast, Constant):
        assert math.isfinite(ast.value), f"non-finite constant {ast.value!r}"
        return repr(float(ast.value))
    if isinstance(ast, Variable):
        return ast.name
    if isinstance(ast, UnaryOp):
        return f"(-{to_source(ast.operand)})"
    if isinstance(ast, BinaryOp):
        return f"({to_source(ast.left)} {ast.op} {to_source(ast.right)})"
    if isinstance(ast, FunctionCall):
        return f"{ast.func}({to_source(ast.arg)})"
    raise TypeError(f"not an expression node: {ast!r}")

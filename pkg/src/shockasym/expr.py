"""Arithmetic expressions over the variables u, v, x.

Everything a problem definition supplies (wave speeds, fluxes, source
terms, initial data) is written in a small fixed grammar: the four binary
operations, unary minus, literal nonnegative integer powers via ``^`` and
the functions exp, ln, sin, cos, sqrt.  Keeping the language this small
makes symbolic derivatives exact and lets coefficient functions compile
to plain numpy callables for the vectorised solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

VARIABLES = ("u", "v", "x")
FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")


class ExpressionError(ValueError):
    """Malformed expression text; carries the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvaluationError(ArithmeticError):
    """Evaluation hit a singular point or an unbound variable."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Pow, Call]


# ---------------------------------------------------------------------------
# tokenizer / parser

def _tokenize(text: str) -> list[tuple[str, object, int, str]]:
    tokens: list[tuple[str, object, int, str]] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            lit = text[i:j]
            try:
                value = float(lit)
            except ValueError:
                raise ExpressionError(f"bad number literal '{lit}'", i) from None
            tokens.append(("num", value, i, lit))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i, text[i:j]))
            i = j
            continue
        if c in "+-*/^()":
            tokens.append(("op", c, i, c))
            i += 1
            continue
        raise ExpressionError(f"unexpected character {c!r}", i)
    tokens.append(("end", None, n, ""))
    return tokens


class _Parser:
    """Recursive descent with conventional precedence.

    ``^`` binds tighter than unary minus, which binds tighter than ``* /``,
    which bind tighter than ``+ -``; all binary operators associate left.
    """

    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, off, _ = self.peek()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected '{op}'", off)
        return self.take()

    def parse_sum(self) -> Node:
        node = self.parse_term()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                node = BinOp(val, node, self.parse_term())
            else:
                return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                node = BinOp(val, node, self.parse_unary())
            else:
                return node

    def parse_unary(self) -> Node:
        kind, val, _, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Node:
        node = self.parse_atom()
        while True:
            kind, val, _, _ = self.peek()
            if kind == "op" and val == "^":
                self.take()
                node = Pow(node, self._integer_exponent())
            else:
                return node

    def _integer_exponent(self) -> int:
        kind, val, off, lit = self.peek()
        if kind != "num":
            raise ExpressionError("integer exponent required after '^'", off)
        if "." in lit or "e" in lit.lower() or not float(val).is_integer():
            raise ExpressionError(
                f"exponent must be a nonnegative integer literal, got '{lit}'", off
            )
        self.take()
        return int(val)

    def parse_atom(self) -> Node:
        kind, val, off, _ = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_sum()
                self.expect_op(")")
                return Call(val, arg)
            if val in VARIABLES:
                return Var(val)
            raise ExpressionError(f"unknown identifier '{val}'", off)
        if kind == "op" and val == "(":
            node = self.parse_sum()
            self.expect_op(")")
            return node
        raise ExpressionError("syntax error", off)


def parse(text: str) -> Node:
    """Parse expression text into an immutable AST."""
    if not text or not text.strip():
        raise ExpressionError("empty expression", 0)
    parser = _Parser(_tokenize(text))
    node = parser.parse_sum()
    kind, _, off, lit = parser.peek()
    if kind != "end":
        raise ExpressionError(f"unexpected trailing input '{lit}'", off)
    return node


# ---------------------------------------------------------------------------
# evaluation

def evaluate(node: Node, bindings: Mapping[str, float]) -> float:
    """Evaluate under standard real semantics; raises EvaluationError at
    singular points (division by zero, ln/sqrt out of domain) and for
    unbound variables."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return float(bindings[node.name])
        except KeyError:
            raise EvaluationError(f"unbound variable '{node.name}'") from None
    if isinstance(node, Neg):
        return -evaluate(node.arg, bindings)
    if isinstance(node, BinOp):
        a = evaluate(node.left, bindings)
        b = evaluate(node.right, bindings)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0.0:
            raise EvaluationError("division by zero")
        return a / b
    if isinstance(node, Pow):
        base = evaluate(node.base, bindings)
        try:
            return float(base**node.exponent)
        except OverflowError:
            raise EvaluationError("overflow in integer power") from None
    if isinstance(node, Call):
        a = evaluate(node.arg, bindings)
        if node.func == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise EvaluationError("overflow in exp") from None
        if node.func == "ln":
            if a <= 0.0:
                raise EvaluationError(f"ln of nonpositive argument {a!r}")
            return math.log(a)
        if node.func == "sin":
            return math.sin(a)
        if node.func == "cos":
            return math.cos(a)
        if node.func == "sqrt":
            if a < 0.0:
                raise EvaluationError(f"sqrt of negative argument {a!r}")
            return math.sqrt(a)
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# differentiation

def constant_fold(node: Node) -> Node:
    """Collapse subtrees whose leaves are all literals.  No other rewriting
    is performed; singular literal subtrees (e.g. a literal 1/0) are kept
    so the error surfaces at evaluation time."""
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Neg):
        arg = constant_fold(node.arg)
        if isinstance(arg, Const):
            return Const(-arg.value)
        return Neg(arg)
    if isinstance(node, BinOp):
        left = constant_fold(node.left)
        right = constant_fold(node.right)
        out = BinOp(node.op, left, right)
        if isinstance(left, Const) and isinstance(right, Const):
            try:
                return Const(evaluate(out, {}))
            except EvaluationError:
                return out
        return out
    if isinstance(node, Pow):
        base = constant_fold(node.base)
        out = Pow(base, node.exponent)
        if isinstance(base, Const):
            try:
                return Const(evaluate(out, {}))
            except EvaluationError:
                return out
        return out
    if isinstance(node, Call):
        arg = constant_fold(node.arg)
        out = Call(node.func, arg)
        if isinstance(arg, Const):
            try:
                return Const(evaluate(out, {}))
            except EvaluationError:
                return out
        return out
    raise TypeError(f"not an expression node: {node!r}")


def _diff(node: Node, var: str) -> Node:
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == var else 0.0)
    if isinstance(node, Neg):
        return Neg(_diff(node.arg, var))
    if isinstance(node, BinOp):
        dl = _diff(node.left, var)
        dr = _diff(node.right, var)
        if node.op in "+-":
            return BinOp(node.op, dl, dr)
        if node.op == "*":
            return BinOp("+", BinOp("*", dl, node.right), BinOp("*", node.left, dr))
        num = BinOp("-", BinOp("*", dl, node.right), BinOp("*", node.left, dr))
        return BinOp("/", num, Pow(node.right, 2))
    if isinstance(node, Pow):
        if node.exponent == 0:
            return Const(0.0)
        inner = _diff(node.base, var)
        scaled = BinOp("*", Const(float(node.exponent)), Pow(node.base, node.exponent - 1))
        return BinOp("*", scaled, inner)
    if isinstance(node, Call):
        da = _diff(node.arg, var)
        if node.func == "exp":
            return BinOp("*", Call("exp", node.arg), da)
        if node.func == "ln":
            return BinOp("/", da, node.arg)
        if node.func == "sin":
            return BinOp("*", Call("cos", node.arg), da)
        if node.func == "cos":
            return Neg(BinOp("*", Call("sin", node.arg), da))
        if node.func == "sqrt":
            return BinOp("/", da, BinOp("*", Const(2.0), Call("sqrt", node.arg)))
    raise TypeError(f"not an expression node: {node!r}")


def differentiate(node: Node, var: str) -> Node:
    """Exact symbolic derivative with respect to one of u, v, x."""
    if var not in VARIABLES:
        raise ValueError(f"cannot differentiate with respect to '{var}'")
    return constant_fold(_diff(node, var))


# ---------------------------------------------------------------------------
# rendering

_PREC_SUM, _PREC_TERM, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _render(node: Node, min_prec: int) -> str:
    if isinstance(node, Const):
        text = repr(node.value)
        if text.startswith("-"):
            return f"({text})"
        return text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_render(node.arg, 0)})"
    if isinstance(node, Neg):
        body = f"-{_render(node.arg, _PREC_UNARY)}"
        return f"({body})" if min_prec > _PREC_UNARY else body
    if isinstance(node, Pow):
        body = f"{_render(node.base, _PREC_ATOM)}^{node.exponent}"
        return f"({body})" if min_prec > _PREC_POW else body
    if isinstance(node, BinOp):
        prec = _PREC_SUM if node.op in "+-" else _PREC_TERM
        # right operand is forced one level tighter so the printed text
        # reparses to the identical tree (binary ops associate left)
        body = f"{_render(node.left, prec)}{node.op}{_render(node.right, prec + 1)}"
        return f"({body})" if min_prec > prec else body
    raise TypeError(f"not an expression node: {node!r}")


def render(node: Node) -> str:
    """Print an AST as expression text that parses back to an equivalent tree."""
    return _render(node, 0)


# ---------------------------------------------------------------------------
# compilation to numpy

_NUMPY_FUNCS = {"exp": "exp", "ln": "log", "sin": "sin", "cos": "cos", "sqrt": "sqrt"}


def _codegen(node: Node, args: frozenset[str]) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        if node.name not in args:
            raise ValueError(f"expression uses '{node.name}', not among arguments {sorted(args)}")
        return node.name
    if isinstance(node, Neg):
        return f"(-{_codegen(node.arg, args)})"
    if isinstance(node, BinOp):
        return f"({_codegen(node.left, args)}{node.op}{_codegen(node.right, args)})"
    if isinstance(node, Pow):
        return f"({_codegen(node.base, args)}**{node.exponent})"
    if isinstance(node, Call):
        return f"np.{_NUMPY_FUNCS[node.func]}({_codegen(node.arg, args)})"
    raise TypeError(f"not an expression node: {node!r}")


def compile_numpy(node: Node, args: tuple[str, ...]) -> Callable:
    """Compile an AST to a vectorised callable of the named arguments.

    Scalars map to floats; array arguments broadcast elementwise.  The
    result always matches the shape of the first argument even when the
    expression is constant.
    """
    if not args:
        raise ValueError("at least one argument name is required")
    body = _codegen(node, frozenset(args))
    raw = eval(f"lambda {', '.join(args)}: ({body})", {"np": np, "__builtins__": {}})

    def fn(*values):
        out = raw(*values)
        if np.ndim(out) == 0:
            if np.ndim(values[0]) > 0:
                return np.full(np.shape(values[0]), float(out))
            return float(out)
        return np.asarray(out, dtype=float)

    return fn

"""Small arithmetic expression grammar for scenario definitions.

Scenarios are data, not code: kappa, f, g, the nominal control and custom
disturbances are given as expression strings over a fixed grammar

    + - * / ^ (also **), sin, cos, sqrt, sgn, numeric constants, pi,
    state x1..x9, input u1..u9, time t

Expressions compile to closures ``(x, u, t) -> float`` and can be
differentiated symbolically with respect to any x_i, u_i or t.  sqrt of a
negative number evaluates to NaN (callers decide what that means); sgn is
treated as piecewise constant, so its derivative is 0 almost everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class ExprError(ValueError):
    """Raised for tokenizer/parser errors; carries a position for messages."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    # kind in {"x", "u", "t"}; index is 0-based, unused for t
    kind: str
    index: int


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Call:
    fn: str  # sin cos sqrt sgn
    arg: object


_FUNCTIONS = ("sin", "cos", "sqrt", "sgn")


# ---------------------------------------------------------------------------
# Tokenizer / parser (Pratt-style precedence climbing)
# ---------------------------------------------------------------------------

def _tokenize(text: str) -> list[tuple[str, object, int]]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE" or
                             (text[j] in "+-" and j > i and text[j - 1] in "eE")):
                j += 1
            try:
                val = float(text[i:j])
            except ValueError:
                raise ExprError(f"bad number {text[i:j]!r} at column {i + 1}")
            tokens.append(("num", val, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        if text.startswith("**", i):
            tokens.append(("op", "^", i))
            i += 2
            continue
        if c in "+-*/^(),":
            tokens.append(("op", c, i))
            i += 1
            continue
        raise ExprError(f"unexpected character {c!r} at column {i + 1}")
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str):
        kind, val, col = self.next()
        if kind != "op" or val != op:
            raise ExprError(f"expected {op!r} at column {col + 1} in {self.text!r}")

    def parse(self):
        node = self.parse_sum()
        kind, val, col = self.peek()
        if kind != "end":
            raise ExprError(f"trailing input at column {col + 1} in {self.text!r}")
        return node

    def parse_sum(self):
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                node = Bin(val, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.next()
                node = Bin(val, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.next()
            return Neg(self.parse_unary())
        if kind == "op" and val == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.next()
            # right-associative; exponent may carry a unary sign
            return Bin("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        kind, val, col = self.next()
        if kind == "num":
            return Num(val)
        if kind == "name":
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_sum()
                self.expect_op(")")
                return Call(val, arg)
            if val == "t":
                return Var("t", 0)
            if val == "pi":
                return Num(math.pi)
            if len(val) >= 2 and val[0] in "xu" and val[1:].isdigit():
                idx = int(val[1:])
                if idx < 1:
                    raise ExprError(f"indices start at 1: {val!r}")
                return Var(val[0], idx - 1)
            raise ExprError(f"unknown name {val!r} at column {col + 1}")
        if kind == "op" and val == "(":
            node = self.parse_sum()
            self.expect_op(")")
            return node
        raise ExprError(f"unexpected token at column {col + 1} in {self.text!r}")


def parse(text: str):
    """Parse an expression string into an AST."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _sgn(v: float) -> float:
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


def _pow(a: float, b: float) -> float:
    """a ** b with NaN for fractional powers of negatives and inf on overflow."""
    if a < 0.0 and b != round(b):
        return math.nan
    try:
        return a ** b
    except OverflowError:
        if a < 0.0 and round(b) % 2 == 1:
            return -math.inf
        return math.inf


def evaluate(node, x, u, t: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.kind == "t":
            return t
        seq = x if node.kind == "x" else u
        return float(seq[node.index])
    if isinstance(node, Neg):
        return -evaluate(node.arg, x, u, t)
    if isinstance(node, Bin):
        a = evaluate(node.left, x, u, t)
        b = evaluate(node.right, x, u, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        return _pow(a, b)
    if isinstance(node, Call):
        v = evaluate(node.arg, x, u, t)
        if node.fn == "sin":
            return math.sin(v)
        if node.fn == "cos":
            return math.cos(v)
        if node.fn == "sqrt":
            return math.sqrt(v) if v >= 0.0 else math.nan
        return _sgn(v)
    raise TypeError(f"not an AST node: {node!r}")


def compile_expr(node):
    """Compile an AST into a fast closure (x, u, t) -> float.

    Each node becomes one nested closure; for the ~10-node expressions used
    in scenarios this beats re-walking the tree and keeps evaluation pure.
    """
    if isinstance(node, Num):
        v = node.value
        return lambda x, u, t: v
    if isinstance(node, Var):
        if node.kind == "t":
            return lambda x, u, t: t
        i = node.index
        if node.kind == "x":
            return lambda x, u, t: x[i]
        return lambda x, u, t: u[i]
    if isinstance(node, Neg):
        f = compile_expr(node.arg)
        return lambda x, u, t: -f(x, u, t)
    if isinstance(node, Bin):
        fa = compile_expr(node.left)
        fb = compile_expr(node.right)
        op = node.op
        if op == "+":
            return lambda x, u, t: fa(x, u, t) + fb(x, u, t)
        if op == "-":
            return lambda x, u, t: fa(x, u, t) - fb(x, u, t)
        if op == "*":
            return lambda x, u, t: fa(x, u, t) * fb(x, u, t)
        if op == "/":
            return lambda x, u, t: fa(x, u, t) / fb(x, u, t)

        return lambda x, u, t: _pow(fa(x, u, t), fb(x, u, t))
    if isinstance(node, Call):
        f = compile_expr(node.arg)
        if node.fn == "sin":
            return lambda x, u, t: math.sin(f(x, u, t))
        if node.fn == "cos":
            return lambda x, u, t: math.cos(f(x, u, t))
        if node.fn == "sqrt":
            def safe_sqrt(x, u, t):
                v = f(x, u, t)
                return math.sqrt(v) if v >= 0.0 else math.nan
            return safe_sqrt
        return lambda x, u, t: _sgn(f(x, u, t))
    raise TypeError(f"not an AST node: {node!r}")


# ---------------------------------------------------------------------------
# Symbolic differentiation within the grammar
# ---------------------------------------------------------------------------

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _is_zero(node) -> bool:
    return isinstance(node, Num) and node.value == 0.0


def _is_one(node) -> bool:
    return isinstance(node, Num) and node.value == 1.0


def _add(a, b):
    if _is_zero(a):
        return b
    if _is_zero(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return Bin("+", a, b)


def _sub(a, b):
    if _is_zero(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if _is_zero(a):
        return Neg(b)
    return Bin("-", a, b)


def _mul(a, b):
    if _is_zero(a) or _is_zero(b):
        return _ZERO
    if _is_one(a):
        return b
    if _is_one(b):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return Bin("*", a, b)


def _div(a, b):
    if _is_zero(a):
        return _ZERO
    if _is_one(b):
        return a
    return Bin("/", a, b)


def diff(node, kind: str, index: int = 0):
    """Differentiate an AST w.r.t. x_index, u_index or t.

    Powers must have a constant exponent; sgn differentiates to zero
    (it is piecewise constant away from the switching point).
    """
    if isinstance(node, Num):
        return _ZERO
    if isinstance(node, Var):
        if node.kind == kind and (kind == "t" or node.index == index):
            return _ONE
        return _ZERO
    if isinstance(node, Neg):
        d = diff(node.arg, kind, index)
        return _ZERO if _is_zero(d) else Neg(d)
    if isinstance(node, Bin):
        da = diff(node.left, kind, index)
        db = diff(node.right, kind, index)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, node.right), _mul(node.left, db))
        if node.op == "/":
            num = _sub(_mul(da, node.right), _mul(node.left, db))
            return _div(num, Bin("^", node.right, Num(2.0)))
        if not isinstance(node.right, Num):
            raise ExprError("power exponents must be numeric constants to differentiate")
        c = node.right.value
        if _is_zero(da):
            return _ZERO
        return _mul(_mul(Num(c), Bin("^", node.left, Num(c - 1.0))), da)
    if isinstance(node, Call):
        d = diff(node.arg, kind, index)
        if _is_zero(d) or node.fn == "sgn":
            return _ZERO
        if node.fn == "sin":
            return _mul(Call("cos", node.arg), d)
        if node.fn == "cos":
            return Neg(_mul(Call("sin", node.arg), d))
        # sqrt
        return _div(d, _mul(Num(2.0), Call("sqrt", node.arg)))
    raise TypeError(f"not an AST node: {node!r}")


def unparse(node) -> str:
    """Render an AST back to grammar text (parenthesized, lossless)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return "t" if node.kind == "t" else f"{node.kind}{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{unparse(node.arg)})"
    if isinstance(node, Bin):
        return f"({unparse(node.left)} {node.op} {unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({unparse(node.arg)})"
    raise TypeError(f"not an AST node: {node!r}")


def _smooth_sgn_ast(node, eps: float):
    """Replace sgn(a) by tanh(a/eps) at evaluation time (returns a closure)."""
    if isinstance(node, (Num, Var)):
        return compile_expr(node)
    if isinstance(node, Neg):
        f = _smooth_sgn_ast(node.arg, eps)
        return lambda x, u, t: -f(x, u, t)
    if isinstance(node, Bin):
        fa = _smooth_sgn_ast(node.left, eps)
        fb = _smooth_sgn_ast(node.right, eps)
        op = node.op
        if op == "+":
            return lambda x, u, t: fa(x, u, t) + fb(x, u, t)
        if op == "-":
            return lambda x, u, t: fa(x, u, t) - fb(x, u, t)
        if op == "*":
            return lambda x, u, t: fa(x, u, t) * fb(x, u, t)
        if op == "/":
            return lambda x, u, t: fa(x, u, t) / fb(x, u, t)
        return lambda x, u, t: _pow(fa(x, u, t), fb(x, u, t))
    if isinstance(node, Call):
        f = _smooth_sgn_ast(node.arg, eps)
        if node.fn == "sin":
            return lambda x, u, t: math.sin(f(x, u, t))
        if node.fn == "cos":
            return lambda x, u, t: math.cos(f(x, u, t))
        if node.fn == "sqrt":
            def safe_sqrt(x, u, t):
                v = f(x, u, t)
                return math.sqrt(v) if v >= 0.0 else math.nan
            return safe_sqrt
        return lambda x, u, t: math.tanh(f(x, u, t) / eps)
    raise TypeError(f"not an AST node: {node!r}")


class Expr:
    """A parsed expression: callable, differentiable, serializable."""

    __slots__ = ("source", "ast", "_fn", "_smooth")

    def __init__(self, source: str, ast=None):
        self.source = source
        self.ast = parse(source) if ast is None else ast
        self._fn = compile_expr(self.ast)
        self._smooth = {}

    def __call__(self, x, u, t: float) -> float:
        return self._fn(x, u, t)

    def eval_smooth(self, x, u, t: float, eps: float) -> float:
        """Evaluate with sgn replaced by tanh(./eps) (smoothness studies)."""
        fn = self._smooth.get(eps)
        if fn is None:
            fn = _smooth_sgn_ast(self.ast, eps)
            self._smooth[eps] = fn
        return fn(x, u, t)

    def diff(self, kind: str, index: int = 0) -> "Expr":
        dast = diff(self.ast, kind, index)
        return Expr(unparse(dast), dast)

    def __repr__(self):
        return f"Expr({self.source!r})"

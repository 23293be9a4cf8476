"""Expression trees over statistic atoms and their second-order expansion.

Grammar (whitespace-insensitive)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" UINT)?
    primary := NUMBER | "S[" UINT "," UINT "," UINT "]" | "(" expr ")"

For an estimator ``f(A)`` of statistics ``A`` with expansion point
``mu = E_inf A``, gradient ``g``, Hessian ``H``, limiting biases ``b`` and
covariances ``V`` (both scaled by n),

    n E(f(A) - f(mu)) -> g.b + 1/2 sum_ij H_ij V_ij
    n Var f(A)        -> g' V g
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from burgbias.errors import ExprSyntaxError, InvalidAtomError, SingularExpansionError
from burgbias.model import MomentContext
from burgbias.statdsl import LinearStat, MeanMode, StatAtom, atom_mean, lbias, lcov

SINGULAR_TOL = 1e-12


class Node:
    """Base of the immutable expression tree; arithmetic operators build new nodes."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_node(other))

    def __radd__(self, other):
        return Add(as_node(other), self)

    def __sub__(self, other):
        return Sub(self, as_node(other))

    def __rsub__(self, other):
        return Sub(as_node(other), self)

    def __mul__(self, other):
        return Mul(self, as_node(other))

    def __rmul__(self, other):
        return Mul(as_node(other), self)

    def __truediv__(self, other):
        return Div(self, as_node(other))

    def __rtruediv__(self, other):
        return Div(as_node(other), self)

    def __pow__(self, exponent):
        return Pow(self, exponent)

    def __neg__(self):
        return Mul(Const(-1.0), self)

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True, eq=True)
class Const(Node):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        if not math.isfinite(self.value):
            raise ValueError("constants must be finite")


@dataclass(frozen=True, eq=True)
class Leaf(Node):
    atom: StatAtom


@dataclass(frozen=True, eq=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True, eq=True)
class Sub(Node):
    left: Node
    right: Node


@dataclass(frozen=True, eq=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True, eq=True)
class Div(Node):
    left: Node
    right: Node


@dataclass(frozen=True, eq=True)
class Pow(Node):
    base: Node
    exponent: int

    def __post_init__(self):
        e = self.exponent
        if isinstance(e, bool) or not isinstance(e, int) or e < 0:
            raise ValueError(f"exponent must be a non-negative integer, got {e!r}")


EstimatorExpr = Node


def as_node(value) -> Node:
    if isinstance(value, Node):
        return value
    if isinstance(value, StatAtom):
        return Leaf(value)
    if isinstance(value, LinearStat):
        if not value.terms:
            return Const(0.0)
        out = None
        for c, a in value.terms:
            t = Leaf(a) if c == 1.0 else Mul(Const(c), Leaf(a))
            out = t if out is None else Add(out, t)
        return out
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Const(value)
    raise TypeError(f"cannot build an expression from {type(value).__name__}")


def S(m: int, k: int, i: int) -> Leaf:
    return Leaf(StatAtom(m, k, i))


# ---------------------------------------------------------------------------
# parsing and printing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<atom>S\s*\[)|(?P<op>[-+*/^(),\]]))"
)


def _tokenize(text: str):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, val, at = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", at)

    def uint(self):
        kind, val, at = self.take()
        if kind != "num" or not val.isdigit():
            raise ExprSyntaxError(f"expected a non-negative integer, found {val or 'end of input'!r}", at)
        return int(val)

    def parse(self):
        node = self.expr()
        kind, val, at = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", at)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return Mul(Const(-1.0), operand)
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[1] == "^":
            self.take()
            base = Pow(base, self.uint())
        return base

    def primary(self):
        kind, val, at = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "atom":
            m = self.uint()
            self.expect(",")
            k = self.uint()
            self.expect(",")
            i = self.uint()
            self.expect("]")
            try:
                return Leaf(StatAtom(m, k, i))
            except InvalidAtomError as exc:
                raise InvalidAtomError(str(exc), at) from None
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {val!r}" if kind != "end" else "unexpected end of input", at)


def parse_expr(text: str) -> Node:
    """Parse an estimator expression such as ``2*S[0,1,2]/(S[0,0,2]+S[1,1,2])``."""
    return _Parser(text).parse()


def parse_linear(text: str) -> LinearStat:
    """Parse text that must denote a linear combination of atoms."""
    node = parse_expr(text)
    value, grad, hess = derivatives_at(node, {a: 1.0 for a in leaves(node)})
    if np.any(hess != 0.0) or not math.isclose(value, grad.sum(), abs_tol=1e-12):
        raise ExprSyntaxError("expression is not a linear combination of atoms", 0)
    return LinearStat(zip(grad, leaves(node)))


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_SYMBOL = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Const):
        text = repr(node.value)
        return (f"({text})", 4) if node.value < 0 or text.startswith("-") else (text, 4)
    if isinstance(node, Leaf):
        return str(node.atom), 4
    if isinstance(node, Pow):
        base, prec = _fmt(node.base)
        if prec < 4:
            base = f"({base})"
        return f"{base}^{node.exponent}", 3
    prec = _PREC[type(node)]
    left, lp = _fmt(node.left)
    right, rp = _fmt(node.right)
    if lp < prec:
        left = f"({left})"
    # left-associative: an equal-precedence right operand needs brackets
    if rp <= prec:
        right = f"({right})"
    return f"{left} {_SYMBOL[type(node)]} {right}", prec


def format_expr(node: Node) -> str:
    return _fmt(node)[0]


# ---------------------------------------------------------------------------
# evaluation and exact derivatives


def leaves(node: Node) -> tuple[StatAtom, ...]:
    """Distinct atoms of the tree in canonical (sorted) order."""
    found: set[StatAtom] = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Leaf):
            found.add(n.atom)
        elif isinstance(n, Pow):
            stack.append(n.base)
        elif isinstance(n, (Add, Sub, Mul, Div)):
            stack.extend((n.left, n.right))
    return tuple(sorted(found))


def evaluate(node: Node, values: Mapping[StatAtom, object]):
    """Evaluate with leaves taken from ``values``; array values broadcast."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Leaf):
        return values[node.atom]
    if isinstance(node, Pow):
        return evaluate(node.base, values) ** node.exponent
    a, b = evaluate(node.left, values), evaluate(node.right, values)
    if isinstance(node, Add):
        return a + b
    if isinstance(node, Sub):
        return a - b
    if isinstance(node, Mul):
        return a * b
    return a / b


def evaluate_on_series(node: Node, z, mode: MeanMode | str = MeanMode.KNOWN, divisor: str = "unbiased"):
    """Value of the estimator computed from data (1-D series or 2-D batch)."""
    vals = {a: a.statistic(z, mode, divisor) for a in leaves(node)}
    return evaluate(node, vals)


def _derivs(node: Node, point: Mapping[StatAtom, float], atoms: Iterable[StatAtom]):
    """Forward-mode value, gradient and Hessian with respect to ``atoms``."""
    index = {a: j for j, a in enumerate(atoms)}
    d = len(index)

    def rec(n):
        if isinstance(n, Const):
            return n.value, np.zeros(d), np.zeros((d, d))
        if isinstance(n, Leaf):
            g = np.zeros(d)
            if n.atom in index:
                g[index[n.atom]] = 1.0
            return float(point[n.atom]), g, np.zeros((d, d))
        if isinstance(n, Pow):
            v, g, h = rec(n.base)
            e = n.exponent
            if e == 0:
                return 1.0, np.zeros(d), np.zeros((d, d))
            d1 = e * v ** (e - 1)
            d2 = e * (e - 1) * v ** (e - 2) if e >= 2 else 0.0
            return v**e, d1 * g, d1 * h + d2 * np.outer(g, g)
        va, ga, ha = rec(n.left)
        vb, gb, hb = rec(n.right)
        if isinstance(n, Add):
            return va + vb, ga + gb, ha + hb
        if isinstance(n, Sub):
            return va - vb, ga - gb, ha - hb
        if isinstance(n, Div):
            if abs(vb) < SINGULAR_TOL:
                raise SingularExpansionError(
                    f"singular expansion point: denominator {format_expr(n.right)} is {vb:.3g}"
                )
            # a/b as a * (1/b)
            vr = 1.0 / vb
            gr = -gb * vr**2
            hr = -hb * vr**2 + 2.0 * np.outer(gb, gb) * vr**3
            vb, gb, hb = vr, gr, hr
        cross = np.outer(ga, gb)
        return va * vb, va * gb + vb * ga, va * hb + vb * ha + cross + cross.T

    return rec(node)


def derivatives_at(node: Node, point: Mapping[StatAtom, float]):
    """Value, gradient and Hessian over ``leaves(node)`` at an arbitrary point."""
    atoms = leaves(node)
    return _derivs(node, point, atoms)


def expansion_point(node: Node, ctx: MomentContext) -> dict[StatAtom, float]:
    return {a: atom_mean(a, ctx) for a in leaves(node)}


def evaluate_at_mean(node: Node, ctx: MomentContext) -> float:
    """Estimator value with every atom replaced by its limit gamma(m-k)."""
    return float(_derivs(node, expansion_point(node, ctx), ())[0])


def differentiate(node: Node, ctx: MomentContext):
    """Exact gradient and Hessian over ``leaves(node)`` at the expansion point."""
    _, g, h = derivatives_at(node, expansion_point(node, ctx))
    return g, h


@dataclass(frozen=True)
class ExpansionResult:
    value_at_mean: float
    bias_coefficient: float
    variance_coefficient: float
    atoms: tuple[StatAtom, ...]
    gradient: np.ndarray = field(repr=False)
    hessian: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    atom_bias: np.ndarray = field(repr=False)


def expand(
    node: Node,
    ctx: MomentContext,
    mode: MeanMode | str = MeanMode.KNOWN,
    divisor: str = "unbiased",
) -> ExpansionResult:
    """Order-1/n bias and variance coefficients of an estimator.

    ``bias ~ bias_coefficient / n`` and ``variance ~ variance_coefficient / n``.
    """
    mode = MeanMode.parse(mode)
    atoms = leaves(node)
    value, g, h = derivatives_at(node, expansion_point(node, ctx))
    V = np.array([[lcov(a, b, ctx, mode) for b in atoms] for a in atoms]).reshape(len(atoms), len(atoms))
    b = np.array([lbias(a, ctx, mode, divisor) for a in atoms])
    bias = float(g @ b + 0.5 * np.sum(h * V))
    var = float(g @ V @ g)
    scale = float(np.abs(g) @ np.abs(V) @ np.abs(g)) if atoms else 0.0
    if -1e-12 * max(scale, 1.0) < var < 0.0:
        var = 0.0
    return ExpansionResult(float(value), bias, var, atoms, g, h, V, b)

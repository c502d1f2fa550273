"""Expression text -> signal objects.

Grammar: numbers, ``t``, ``pi``, ``sin``, ``cos``, ``exp``, ``abs``,
``sqrt``, binary ``+ - * /``, unary minus and parentheses.  Parsing reuses
Python's :mod:`ast` for tokenizing and precedence, then walks the tree with
a whitelist.

Two targets:

* :func:`parse_signal` - the structured AP + ergodic form used for
  coefficients and inputs; anything outside that shape is rejected.
* :func:`compile_expression` - a general vectorized function of ``t`` for
  densities and history functions (e.g. ``exp(sin(t))``).
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ExpressionError
from .funcmodel import APTerm, ErgTerm, SignalExpr

_FUNCS = ("sin", "cos", "exp", "abs", "sqrt")


def _tree(text: str) -> ast.expr:
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("empty expression")
    try:
        return ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg} at column {exc.offset}") from None


# --- structured parsing -------------------------------------------------

class _Poly:
    """Polynomial in t of degree <= 2 (constants are degree 0)."""

    __slots__ = ("c",)

    def __init__(self, c0=0.0, c1=0.0, c2=0.0):
        self.c = [float(c0), float(c1), float(c2)]

    @property
    def is_const(self):
        return self.c[1] == 0 and self.c[2] == 0


class _AbsT:
    """k * |t|."""

    __slots__ = ("k",)

    def __init__(self, k):
        self.k = float(k)


class _Lin:
    """Linear combination of basis signals plus a constant."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms = dict(terms or {})
        self.const = float(const)

    def scaled(self, k):
        return _Lin({key: k * v for key, v in self.terms.items()}, k * self.const)


def _as_lin(v, text):
    if isinstance(v, _Lin):
        return v
    if isinstance(v, _Poly) and v.is_const:
        return _Lin(const=v.c[0])
    raise ExpressionError(f"{text!r}: unbounded polynomial or |t| term outside a supported kernel")


def _const(v):
    if isinstance(v, _Poly) and v.is_const:
        return v.c[0]
    if isinstance(v, _Lin) and not v.terms:
        return v.const
    return None


class _SignalBuilder:
    def __init__(self, text):
        self.text = text

    def fail(self, what):
        raise ExpressionError(f"{self.text!r}: {what}")

    def visit(self, node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return _Poly(node.value)
        if isinstance(node, ast.Name):
            if node.id == "t":
                return _Poly(0.0, 1.0)
            if node.id == "pi":
                return _Poly(math.pi)
            self.fail(f"unknown name {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            return self.neg(self.visit(node.operand)) if isinstance(node.op, ast.USub) \
                else self.visit(node.operand)
        if isinstance(node, ast.BinOp):
            left, right = self.visit(node.left), self.visit(node.right)
            if isinstance(node.op, ast.Add):
                return self.add(left, right)
            if isinstance(node.op, ast.Sub):
                return self.add(left, self.neg(right))
            if isinstance(node.op, ast.Mult):
                return self.mul(left, right)
            if isinstance(node.op, ast.Div):
                return self.div(left, right)
            self.fail(f"operator {type(node.op).__name__} not supported")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
            return self.call(node.func.id, self.visit(node.args[0]))
        self.fail(f"unsupported construct {ast.dump(node)[:40]}")

    def neg(self, v):
        if isinstance(v, _Poly):
            return _Poly(*(-c for c in v.c))
        if isinstance(v, _AbsT):
            return _AbsT(-v.k)
        return v.scaled(-1.0)

    def add(self, a, b):
        if isinstance(a, _Poly) and isinstance(b, _Poly):
            return _Poly(*(x + y for x, y in zip(a.c, b.c)))
        la, lb = _as_lin(a, self.text), _as_lin(b, self.text)
        terms = dict(la.terms)
        for key, v in lb.terms.items():
            terms[key] = terms.get(key, 0.0) + v
        return _Lin(terms, la.const + lb.const)

    def mul(self, a, b):
        ka, kb = _const(a), _const(b)
        if ka is None and kb is None:
            if isinstance(a, _Poly) and isinstance(b, _Poly):
                if a.c[2] or b.c[2]:
                    self.fail("polynomial degree above 2")
                return _Poly(a.c[0] * b.c[0], a.c[0] * b.c[1] + a.c[1] * b.c[0], a.c[1] * b.c[1])
            self.fail("product of two non-constant signals is outside the AP+ergodic shape")
        if ka is None:
            a, b, ka, kb = b, a, kb, ka
        # a is constant ka, b is arbitrary
        if isinstance(b, _Poly):
            return _Poly(*(ka * c for c in b.c))
        if isinstance(b, _AbsT):
            return _AbsT(ka * b.k)
        return b.scaled(ka)

    def div(self, a, b):
        kb = _const(b)
        if kb is not None:
            if kb == 0:
                self.fail("division by zero")
            return self.mul(a, _Poly(1.0 / kb))
        ka = _const(a)
        if ka is not None and isinstance(b, _Poly):
            c0, c1, c2 = b.c
            if c1 == 0 and c2 > 0 and c0 == c2:
                return _Lin({("rational_decay",): ka / c0})
        self.fail("only constant / (k + k*t*t) is supported as a rational kernel")

    def call(self, name, arg):
        if name == "abs":
            k = _const(arg)
            if k is not None:
                return _Poly(abs(k))
            if isinstance(arg, _Poly) and arg.c[0] == 0 and arg.c[2] == 0:
                return _AbsT(abs(arg.c[1]))
            self.fail("abs() only of a constant or k*t")
        if name == "sqrt":
            k = _const(arg)
            if k is None or k < 0:
                self.fail("sqrt() only of a nonnegative constant")
            return _Poly(math.sqrt(k))
        if name in ("sin", "cos"):
            if not isinstance(arg, _Poly) or arg.c[2] != 0:
                self.fail(f"{name}() argument must be affine in t")
            omega, phase = arg.c[1], arg.c[0]
            if omega == 0:
                return _Poly((math.sin if name == "sin" else math.cos)(phase))
            return _Lin({(name, omega, phase): 1.0})
        # exp
        k = _const(arg)
        if k is not None:
            return _Poly(math.exp(k))
        if isinstance(arg, _Poly) and arg.c[1] == -1.0 and arg.c[2] == 0:
            return _Lin({("exp_decay",): math.exp(arg.c[0])})
        if isinstance(arg, _AbsT) and arg.k == -1.0:
            return _Lin({("exp_abs_decay",): 1.0})
        self.fail("exp() only of a constant, -t (+const) or -abs(t)")


def parse_signal(text: str, t_floor: float = 0.0) -> SignalExpr:
    """Parse grammar text into a :class:`SignalExpr`.

    A top-level ``(...)/k`` with constant ``k > 0`` becomes the ``scale``.

    >>> parse_signal("(2*sin(t)+exp(-t))/10")(0.0)
    0.1
    """
    node = _tree(text)
    builder = _SignalBuilder(text)
    scale = 1.0
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Div):
        k = _const(builder.visit(node.right))
        if k is not None and k > 0:
            scale, node = k, node.left
    lin = _as_lin(builder.visit(node), text)
    ap, erg = [], []
    if lin.const:
        ap.append(APTerm(lin.const))
    for key, amp in lin.terms.items():
        if amp == 0:
            continue
        if key[0] in ("sin", "cos"):
            ap.append(APTerm(amp, key[0], key[1], key[2]))
        else:
            erg.append(ErgTerm(amp, key[0]))
    return SignalExpr(tuple(ap), tuple(erg), scale, t_floor)


# --- general expressions ------------------------------------------------

_NP = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs, "sqrt": np.sqrt}


def _compile(node, text) -> Callable:
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        v = float(node.value)
        return lambda t: v
    if isinstance(node, ast.Name):
        if node.id == "t":
            return lambda t: t
        if node.id == "pi":
            return lambda t: math.pi
        raise ExpressionError(f"{text!r}: unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        f = _compile(node.operand, text)
        return (lambda t: -f(t)) if isinstance(node.op, ast.USub) else f
    if isinstance(node, ast.BinOp):
        f, g = _compile(node.left, text), _compile(node.right, text)
        ops = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide}
        op = ops.get(type(node.op))
        if op is None:
            raise ExpressionError(f"{text!r}: operator {type(node.op).__name__} not supported")
        return lambda t: op(f(t), g(t))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords:
        fn, f = _NP[node.func.id], _compile(node.args[0], text)
        return lambda t: fn(f(t))
    raise ExpressionError(f"{text!r}: unsupported construct")


@dataclass(frozen=True)
class GeneralExpr:
    """Vectorized function of ``t`` compiled from grammar text."""

    text: str
    _fn: Callable = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_fn", _compile(_tree(self.text), self.text))

    @property
    def has_kink_at_zero(self) -> bool:
        return "abs" in self.text

    def __call__(self, t):
        tt = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            out = np.broadcast_to(np.asarray(self._fn(tt), dtype=float), tt.shape)
        return float(out) if np.ndim(t) == 0 else np.array(out)


def compile_expression(text: str) -> GeneralExpr:
    return GeneralExpr(text)

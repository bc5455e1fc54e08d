"""Immutable expression-tree nodes.

Leaves are constants (numbers, multivectors, matrices) and named variables.
Equality is structural; ``Const(0.5) == Const(Fraction(1, 2))`` because the
numbers compare equal.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterator, Union

import numpy as np

from qspinor.clifford import Multivector

Number = Union[int, Fraction, float, complex]

_SPINOR = re.compile(r"^(xa\d+|xd\d+|u(_\w*|\d*))$")


def var_kind(name: str) -> str:
    """Classify a variable name.

    ``q`` is the deformation parameter; ``xa<k>`` (undotted x^alpha),
    ``xd<k>`` (dotted x_beta-dot) and ``u``/``u_*`` are spinor
    indeterminates; ``dq_*`` are formal q-differentials; anything else is a
    coordinate.
    """
    if name == "q":
        return "parameter"
    if name.startswith("dq_"):
        return "differential"
    if _SPINOR.match(name):
        return "spinor"
    return "coordinate"


class Expr:
    __slots__ = ()
    precedence = 5

    def children(self) -> tuple["Expr", ...]:
        return ()

    def _key(self):
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and self._key() == other._key()

    def __hash__(self):
        return hash((type(self).__name__, self._key()))

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, n: int):
        return Pow(self, n)

    def __str__(self):
        from qspinor.expr.parser import to_text

        return to_text(self)

    def walk(self) -> Iterator["Expr"]:
        yield self
        for child in self.children():
            yield from child.walk()


def _value_key(value):
    if isinstance(value, np.ndarray):
        return ("matrix", value.shape, value.tobytes())
    if isinstance(value, Multivector):
        return ("mv", value)
    return ("num", value)


class Const(Expr):
    __slots__ = ("value", "name")

    def __init__(self, value, name: str | None = None):
        if isinstance(value, np.ndarray):
            value = np.array(value, dtype=np.complex128)
            if value.ndim != 2 or value.shape[0] != value.shape[1]:
                raise ValueError(f"matrix constants must be square, got shape {value.shape}")
            value.flags.writeable = False
        elif isinstance(value, bool) or not isinstance(value, (int, Fraction, float, complex, Multivector)):
            raise TypeError(f"unsupported constant {value!r}")
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "name", name)

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    def _key(self):
        key = _value_key(self.value)
        return key + (self.name,) if key[0] == "matrix" else key

    @property
    def is_number(self) -> bool:
        return not isinstance(self.value, (np.ndarray, Multivector))

    def __repr__(self):
        return f"Const({self.name or self.value!r})"


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    @property
    def kind(self) -> str:
        return var_kind(self.name)

    def _key(self):
        return self.name

    def __repr__(self):
        return f"Var({self.name})"


class _Unary(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", as_expr(arg))

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    def children(self):
        return (self.arg,)

    def _key(self):
        return self.arg


class Neg(_Unary):
    __slots__ = ()
    precedence = 3

    def __repr__(self):
        return f"Neg({self.arg!r})"


class Call(Expr):
    """Function-symbol application: ``exp`` or a user-registered opaque symbol."""

    __slots__ = ("func", "arg")

    def __init__(self, func: str, arg: Expr):
        object.__setattr__(self, "func", func)
        object.__setattr__(self, "arg", as_expr(arg))

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.func, self.arg)

    def __repr__(self):
        return f"Call({self.func}, {self.arg!r})"


def Exp(arg) -> Call:
    return Call("exp", arg)


class _Binary(Expr):
    __slots__ = ("left", "right")
    symbol = "?"

    def __init__(self, left: Expr, right: Expr):
        object.__setattr__(self, "left", as_expr(left))
        object.__setattr__(self, "right", as_expr(right))

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    def children(self):
        return (self.left, self.right)

    def _key(self):
        return (self.left, self.right)

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(_Binary):
    __slots__ = ()
    precedence = 1
    symbol = "+"


class Sub(_Binary):
    __slots__ = ()
    precedence = 1
    symbol = "-"


class Mul(_Binary):
    __slots__ = ()
    precedence = 2
    symbol = "*"


class Div(_Binary):
    __slots__ = ()
    precedence = 2
    symbol = "/"


class Pow(Expr):
    __slots__ = ("base", "exponent")
    precedence = 4

    def __init__(self, base: Expr, exponent: int):
        if isinstance(exponent, bool) or not isinstance(exponent, (int, np.integer)):
            raise TypeError(f"only integer powers are supported, got {exponent!r}")
        object.__setattr__(self, "base", as_expr(base))
        object.__setattr__(self, "exponent", int(exponent))

    def __setattr__(self, key, value):
        raise AttributeError("expressions are immutable")

    def children(self):
        return (self.base,)

    def _key(self):
        return (self.base, self.exponent)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


ZERO = Const(0)
ONE = Const(1)
I_UNIT = Const(1j, name="i")
Q = Var("q")


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        from qspinor.expr.parser import parse

        return parse(value)
    return Const(value)


def free_vars(e: Expr) -> set[str]:
    return {node.name for node in e.walk() if isinstance(node, Var)}


def functions_used(e: Expr) -> set[str]:
    return {node.func for node in e.walk() if isinstance(node, Call)}


def substitute(e: Expr, var: str, replacement) -> Expr:
    """Replace every occurrence of variable ``var`` by ``replacement``.

    The tree order of ``e`` is kept, so a non-commuting replacement lands
    exactly where the variable stood.
    """
    replacement = as_expr(replacement)

    def go(node: Expr) -> Expr:
        if isinstance(node, Var):
            return replacement if node.name == var else node
        if isinstance(node, Const):
            return node
        if isinstance(node, Neg):
            return Neg(go(node.arg))
        if isinstance(node, Call):
            return Call(node.func, go(node.arg))
        if isinstance(node, Pow):
            return Pow(go(node.base), node.exponent)
        if isinstance(node, _Binary):
            return type(node)(go(node.left), go(node.right))
        raise TypeError(f"unknown node {node!r}")

    return go(as_expr(e))

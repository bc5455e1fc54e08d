"""Numeric evaluation of expression trees.

Values are Python complex scalars, :class:`Multivector` or square complex
``numpy`` arrays. Scalars act as multiples of the identity in sums with the
other two kinds; a multivector and a matrix never combine.
"""

from __future__ import annotations

import cmath
from fractions import Fraction
from typing import Any, Mapping, Union

import numpy as np

from qspinor.clifford import Multivector
from qspinor.expr.nodes import Add, Call, Const, Div, Expr, Mul, Neg, Pow, Sub, Var, as_expr

Value = Union[complex, Multivector, np.ndarray]
Binding = Mapping[str, Any]

TINY = 1e-300


class UnboundVariableError(KeyError):
    pass


def _num(value) -> Value:
    if isinstance(value, (Multivector, np.ndarray)):
        if isinstance(value, np.ndarray):
            arr = np.asarray(value, dtype=np.complex128)
            if arr.ndim == 0:
                return complex(arr)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValueError(f"matrix values must be square, got shape {arr.shape}")
            return arr
        return value
    if isinstance(value, Fraction):
        return complex(float(value))
    return complex(value)


def _is_scalar(v) -> bool:
    return isinstance(v, complex)


def _check_shapes(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise ValueError(f"matrix shape mismatch: {a.shape} vs {b.shape}")


def add(a: Value, b: Value) -> Value:
    if _is_scalar(a) and _is_scalar(b):
        return a + b
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        if isinstance(a, Multivector) or isinstance(b, Multivector):
            raise TypeError("cannot combine a multivector with a matrix")
        if _is_scalar(a):
            return a * np.eye(b.shape[0]) + b
        if _is_scalar(b):
            return a + b * np.eye(a.shape[0])
        _check_shapes(a, b)
        return a + b
    return a + b


def mul(a: Value, b: Value) -> Value:
    if _is_scalar(a) or _is_scalar(b):
        return a * b
    if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
        _check_shapes(a, b)
        return a @ b
    if isinstance(a, Multivector) and isinstance(b, Multivector):
        return a * b
    raise TypeError("cannot multiply a multivector with a matrix")


def inverse(v: Value) -> Value:
    if _is_scalar(v):
        if abs(v) < TINY:
            raise ZeroDivisionError("division by a value of magnitude below 1e-300")
        return 1 / v
    if isinstance(v, np.ndarray):
        try:
            return np.linalg.inv(v)
        except np.linalg.LinAlgError as exc:
            raise ZeroDivisionError("division by a singular matrix") from exc
    return v.inverse()


def power(v: Value, n: int) -> Value:
    if n < 0:
        return power(inverse(v), -n)
    if _is_scalar(v):
        return v**n
    if isinstance(v, np.ndarray):
        return np.linalg.matrix_power(v, n)
    out = Multivector.scalar(v.sig, 1.0)
    for _ in range(n):
        out = out * v
    return out


def _call(func: str, arg: Value, binding: Binding) -> Value:
    if func in binding:
        impl = binding[func]
        if callable(impl):
            return _num(impl(arg))
        if isinstance(impl, Mapping):
            try:
                return _num(impl[arg])
            except KeyError:
                raise UnboundVariableError(f"no tabulated value of {func} at {arg}") from None
        raise TypeError(f"binding for function {func!r} must be callable or a table")
    if func == "exp":
        if not _is_scalar(arg):
            raise TypeError("exp is only defined for scalar arguments")
        return cmath.exp(arg)
    raise UnboundVariableError(f"function symbol {func!r} has no binding")


def evaluate(e: Expr | str, binding: Binding | None = None) -> Value:
    """Evaluate ``e`` with every free variable taken from ``binding``."""
    binding = binding or {}
    e = as_expr(e)

    def go(node: Expr) -> Value:
        if isinstance(node, Const):
            return _num(node.value)
        if isinstance(node, Var):
            if node.name not in binding:
                raise UnboundVariableError(f"variable {node.name!r} is not bound")
            return _num(binding[node.name])
        if isinstance(node, Neg):
            return mul(-1 + 0j, go(node.arg))
        if isinstance(node, Add):
            return add(go(node.left), go(node.right))
        if isinstance(node, Sub):
            return add(go(node.left), mul(-1 + 0j, go(node.right)))
        if isinstance(node, Mul):
            return mul(go(node.left), go(node.right))
        if isinstance(node, Div):
            return mul(go(node.left), inverse(go(node.right)))
        if isinstance(node, Pow):
            return power(go(node.base), node.exponent)
        if isinstance(node, Call):
            return _call(node.func, go(node.arg), binding)
        raise TypeError(f"cannot evaluate {node!r}")

    return go(e)


def as_matrix(v: Value, dim: int) -> np.ndarray:
    """Scalars become multiples of the ``dim`` x ``dim`` identity."""
    if isinstance(v, np.ndarray):
        if v.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {v.shape}")
        return v
    if isinstance(v, Multivector):
        raise TypeError("multivector values need an explicit matrix representation")
    return complex(v) * np.eye(dim, dtype=np.complex128)


def max_norm(v: Value) -> float:
    if isinstance(v, np.ndarray):
        return float(np.max(np.abs(v))) if v.size else 0.0
    if isinstance(v, Multivector):
        return v.max_abs()
    return abs(v)


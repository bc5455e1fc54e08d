"""q-derivatives: Jackson, modified (argument-scaled), directional, and the chain rule.

All symbolic results keep ``q`` as the symbol ``q``; the numeric value in
:class:`QContext` is used only when an expression is evaluated.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

from qspinor.clifford import DEFAULT_SIGNATURE, Multivector, Signature
from qspinor.expr import (
    Const,
    Expr,
    Q,
    Var,
    as_expr,
    evaluate,
    free_vars,
    parse,
    simplify,
    substitute,
)
from qspinor.expr.parser import generator_const


@dataclass(frozen=True)
class QContext:
    """Deformation parameter and evaluation settings."""

    q: float = 0.5
    tol: float = 1e-10
    max_terms: int = 1000
    x0: complex = 1.0

    def __post_init__(self):
        q = self.q
        if isinstance(q, complex):
            raise ValueError("q must be real")
        if not math.isfinite(q) or q <= 0 or q == 1:
            raise ValueError(f"q must be positive and different from 1, got {q}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValueError(f"max_terms must be a positive integer, got {self.max_terms}")

    def bind(self, binding: Mapping | None = None) -> dict:
        """``binding`` with ``q`` set to this context's value (an explicit ``q`` wins)."""
        out = {"q": self.q}
        if binding:
            out.update(binding)
        return out


class QDerivKind(enum.Enum):
    JACKSON = "jackson"
    MODIFIED = "modified"
    DIRECTIONAL = "directional"


def _var(var) -> Var:
    v = as_expr(var)
    if not isinstance(v, Var):
        raise ValueError(f"expected a variable name, got {var!r}")
    return v


def jackson_deriv(f, var: str, ctx: QContext | None = None) -> Expr:
    """``(f(q*x) - f(x)) / ((q-1)*x)`` simplified; ``x^n`` gives ``[n]_q x^(n-1)``."""
    f = as_expr(f)
    x = _var(var)
    return simplify((substitute(f, x.name, Q * x) - f) / ((Q - 1) * x))


def modified_qderiv(f, var: str, ctx: QContext | None = None) -> Expr:
    """``(f(q*x) - q*f(x)) / ((q-1)*x)`` simplified. Kills ``f = x``; sends 1 to ``-1/x``."""
    f = as_expr(f)
    x = _var(var)
    return simplify((substitute(f, x.name, Q * x) - Q * f) / ((Q - 1) * x))


def _direction_const(direction) -> Const:
    if isinstance(direction, str):
        direction = parse(direction)
    if isinstance(direction, Const) and isinstance(direction.value, Multivector):
        mv = direction.value
    elif isinstance(direction, Multivector):
        mv = direction
    else:
        raise ValueError(f"direction must be a single Clifford generator, got {direction!r}")
    mask = mv.single_blade()
    if mask is None or mask == 0 or mask & (mask - 1) or mv[mask] != 1:
        raise ValueError(f"direction must be a single generator e_k, got {mv}")
    return generator_const(mv.sig, mask.bit_length())


def directional_qdiff(f, coord: str, direction, step_var: str, ctx: QContext | None = None) -> Expr:
    """``(f[coord -> coord + q*e*s] - f) / s`` simplified, ``s`` a spinor indeterminate.

    ``direction`` is a generator: a :class:`Multivector`, a generator
    constant, or text such as ``"e2"``.
    """
    f = as_expr(f)
    x = _var(coord)
    s = _var(step_var)
    if s.kind != "spinor":
        raise ValueError(f"step variable {s.name!r} is not a spinor indeterminate (xa<k>, xd<k>, u...)")
    e = _direction_const(direction)
    return simplify((substitute(f, x.name, x + Q * e * s) - f) / s)


def chain_rule(psi, u_of_x, var: str, ctx: QContext | None = None, u: str = "u", compose: bool = True) -> Expr:
    """``modified_qderiv(psi, u)`` at ``u = u(x)``, times ``jackson_deriv(u(x), x)``.

    With ``compose=False`` the outer factor stays written in ``u``, which keeps
    the inner factor visible: ``u = q^2*x`` gives ``q^2 * (...)`` rather than
    letting the ``q^2`` cancel against ``1/u``.
    """
    psi = as_expr(psi)
    u_of_x = as_expr(u_of_x)
    stray = free_vars(psi) - {u, "q"}
    if stray:
        raise ValueError(f"psi must depend on {u!r} only, found {sorted(stray)}")
    outer = modified_qderiv(psi, u)
    if compose:
        outer = substitute(outer, u, u_of_x)
    return simplify(outer * jackson_deriv(u_of_x, var))


def qderivative(
    f,
    var: str,
    kind: QDerivKind | str = QDerivKind.JACKSON,
    ctx: QContext | None = None,
    *,
    direction=None,
    step: str | None = None,
) -> Expr:
    kind = QDerivKind(kind)
    if kind is QDerivKind.JACKSON:
        return jackson_deriv(f, var, ctx)
    if kind is QDerivKind.MODIFIED:
        return modified_qderiv(f, var, ctx)
    if direction is None or step is None:
        raise ValueError("directional derivatives need a direction and a step variable")
    return directional_qdiff(f, var, direction, step, ctx)


def default_step(index: int) -> str:
    """Step variable for the first (``x^alpha``) or second (``x_beta-dot``) coordinate."""
    return "xa1" if index == 0 else "xd2"


def jackson_quotient(f, var: str, x: complex, ctx: QContext, binding: Mapping | None = None):
    """Numeric ``(f(q x) - f(x)) / ((q-1) x)`` without any symbolic cancellation."""
    f = as_expr(f)
    if x == 0:
        raise ZeroDivisionError("the Jackson quotient is undefined at x = 0")
    env = ctx.bind(binding)
    hi = evaluate(f, {**env, var: ctx.q * x})
    lo = evaluate(f, {**env, var: x})
    return (hi - lo) * (1.0 / ((ctx.q - 1) * x))


def generator(k: int, sig: Signature = DEFAULT_SIGNATURE) -> Const:
    return generator_const(sig, k)
